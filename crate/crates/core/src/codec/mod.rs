//! Classical layer: the one-time-pad base cipher and the t-error-correcting code.
//!
//! Two codes are available. [`OracleCodec`] is a genie-aided code that knows the
//! transmitted codeword and succeeds exactly when at most `t` bits flipped; it
//! makes Monte-Carlo failure rates exact functions of the flip count. [`BchCodec`]
//! is a shortened binary BCH code for genuine end-to-end runs.

mod bch;

pub use bch::BchCodec;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CodecScheme {
    #[default]
    Oracle,
    Concrete,
}

/// Shape of the error-correcting layer: `n` message bits, `N` codeword bits,
/// `t` correctable errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodecSpec {
    pub message_len: usize,
    pub codeword_len: usize,
    pub correctable: usize,
    #[serde(default)]
    pub scheme: CodecScheme,
}

impl CodecSpec {
    pub fn validate(&self) -> Result<()> {
        if self.message_len == 0 || self.codeword_len == 0 {
            return Err(invalid("message and codeword lengths must be positive"));
        }
        if self.message_len > self.codeword_len {
            return Err(invalid(format!(
                "message length {} exceeds codeword length {}",
                self.message_len, self.codeword_len
            )));
        }
        if 2 * self.correctable >= self.codeword_len {
            return Err(invalid(format!(
                "correctable errors t = {} must be below N/2 = {}",
                self.correctable,
                self.codeword_len as f64 / 2.0
            )));
        }
        Ok(())
    }
}

/// XOR one-time pad: `m' = m ⊕ s[..n]`. The pad must be at least as long as the message.
pub fn base_encrypt(pad: &BitString, message: &BitString) -> Result<BitString> {
    if pad.len() < message.len() {
        return Err(Error::LengthMismatch {
            what: "one-time pad",
            expected: message.len(),
            actual: pad.len(),
        });
    }
    pad.slice(0, message.len()).xor(message)
}

/// Inverse of [`base_encrypt`] (the pad is an involution).
pub fn base_decrypt(pad: &BitString, ciphertext: &BitString) -> Result<BitString> {
    base_encrypt(pad, ciphertext)
}

/// Anything that maps a received word back to a message.
pub trait Decoder {
    fn decode(&self, received: &BitString) -> Result<BitString>;
}

/// Genie-aided code: systematic layout `[m' | m' repeated cyclically]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleCodec {
    spec: CodecSpec,
}

impl OracleCodec {
    pub fn new(spec: CodecSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec })
    }

    pub fn encode(&self, message: &BitString) -> Result<BitString> {
        let n = self.spec.message_len;
        check_len("message", n, message.len())?;
        Ok((0..self.spec.codeword_len)
            .map(|i| message.get(i % n))
            .collect())
    }

    /// Binds the decoder to the transmitted codeword.
    pub fn bind<'a>(&'a self, transmitted: &'a BitString) -> OracleDecoder<'a> {
        OracleDecoder {
            codec: self,
            transmitted: Some(transmitted),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleDecoder<'a> {
    codec: &'a OracleCodec,
    transmitted: Option<&'a BitString>,
}

impl Decoder for OracleDecoder<'_> {
    fn decode(&self, received: &BitString) -> Result<BitString> {
        let spec = &self.codec.spec;
        check_len("received word", spec.codeword_len, received.len())?;
        let sent = self.transmitted.ok_or(Error::OracleUnbound)?;
        if received.hamming_distance(sent)? <= spec.correctable {
            Ok(sent.slice(0, spec.message_len))
        } else {
            Err(Error::DecodeFailure)
        }
    }
}

/// Codec selected by a [`CodecSpec`].
#[derive(Debug, Clone)]
pub enum Codec {
    Oracle(OracleCodec),
    Bch(BchCodec),
}

impl Codec {
    pub fn from_spec(spec: CodecSpec) -> Result<Self> {
        match spec.scheme {
            CodecScheme::Oracle => OracleCodec::new(spec).map(Codec::Oracle),
            CodecScheme::Concrete => BchCodec::new(spec).map(Codec::Bch),
        }
    }

    pub fn spec(&self) -> CodecSpec {
        match self {
            Codec::Oracle(c) => c.spec,
            Codec::Bch(c) => c.spec(),
        }
    }

    pub fn encode(&self, message: &BitString) -> Result<BitString> {
        match self {
            Codec::Oracle(c) => c.encode(message),
            Codec::Bch(c) => c.encode(message),
        }
    }

    /// Decoder for one transmission. The oracle needs the transmitted
    /// codeword; the BCH decoder ignores it.
    pub fn decoder<'a>(&'a self, transmitted: Option<&'a BitString>) -> CodecDecoder<'a> {
        match self {
            Codec::Oracle(c) => CodecDecoder::Oracle(OracleDecoder {
                codec: c,
                transmitted,
            }),
            Codec::Bch(c) => CodecDecoder::Bch(c),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum CodecDecoder<'a> {
    Oracle(OracleDecoder<'a>),
    Bch(&'a BchCodec),
}

impl Decoder for CodecDecoder<'_> {
    fn decode(&self, received: &BitString) -> Result<BitString> {
        match self {
            CodecDecoder::Oracle(d) => d.decode(received),
            CodecDecoder::Bch(c) => c.decode(received),
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}
