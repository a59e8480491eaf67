use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// A fixed-length string of bits.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Builds a bit string from `0`/`1` bytes. Any other byte value is rejected.
    pub fn from_bytes01(bytes: &[u8]) -> Result<Self> {
        bytes
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Format(format!("bit value {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bools)
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self {
            bits: (0..len).map(|_| rng.random::<bool>()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    /// Number of ones.
    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                what: "xor operand",
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(Self {
            bits: self.iter().zip(other.iter()).map(|(a, b)| a ^ b).collect(),
        })
    }

    pub fn hamming_distance(&self, other: &BitString) -> Result<usize> {
        Ok(self.xor(other)?.weight())
    }

    /// Sub-string `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> BitString {
        Self {
            bits: self.bits[start..start + len].to_vec(),
        }
    }

    /// Packs the bits MSB-first into bytes and hex-encodes them. The final
    /// byte is zero-padded on the right.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self
            .bits
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (j, &b)| acc | ((b as u8) << (7 - j)))
            })
            .collect();
        hex::encode(bytes)
    }

    /// Inverse of [`BitString::to_hex`]; `len` is the number of meaningful bits.
    pub fn from_hex(text: &str, len: usize) -> Result<Self> {
        let bytes = hex::decode(text).map_err(|e| Error::Format(format!("bad hex: {e}")))?;
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::Format(format!(
                "hex string holds {} bytes, {} bits need {}",
                bytes.len(),
                len,
                len.div_ceil(8)
            )));
        }
        let mut bits = Vec::with_capacity(bytes.len() * 8);
        for byte in &bytes {
            for j in 0..8 {
                bits.push((byte >> (7 - j)) & 1 == 1);
            }
        }
        if bits[len..].iter().any(|&b| b) {
            return Err(Error::Format("nonzero padding bits in hex string".into()));
        }
        bits.truncate(len);
        Ok(Self { bits })
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(")?;
        for b in &self.bits {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        write!(f, ")")
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self {
            bits: iter.into_iter().collect(),
        }
    }
}
