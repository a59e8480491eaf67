//! Shortened binary BCH codes over GF(2^m).
//!
//! Codeword bit `i` is the coefficient of `x^i`. Parity occupies positions
//! `0..r` and information bits `r..N`, where `r = deg g(x)`. Information bits
//! past the message length are fixed to zero (further shortening) and are
//! checked on decode.

use crate::bits::BitString;
use crate::error::{invalid, Error, Result};

use super::{check_len, CodecScheme, CodecSpec};

/// Primitive polynomials, indexed by the field degree `m`.
const PRIMITIVE_POLYS: [u32; 17] = [
    0, 0, 0x7, 0xB, 0x13, 0x25, 0x43, 0x89, 0x11D, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443,
    0x8003, 0x1100B,
];

#[derive(Debug, Clone)]
struct Gf {
    order: usize, // 2^m - 1
    exp: Vec<u16>,
    log: Vec<u16>,
}

impl Gf {
    fn new(m: usize) -> Self {
        let order = (1usize << m) - 1;
        let poly = PRIMITIVE_POLYS[m];
        let mut exp = vec![0u16; 2 * order];
        let mut log = vec![0u16; order + 1];
        let mut x: u32 = 1;
        for (i, slot) in exp.iter_mut().take(order).enumerate() {
            *slot = x as u16;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & (1 << m) != 0 {
                x ^= poly;
            }
        }
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        Self { order, exp, log }
    }

    fn alpha_pow(&self, e: usize) -> u16 {
        self.exp[e % self.order]
    }

    fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    fn div(&self, a: u16, b: u16) -> u16 {
        debug_assert!(b != 0);
        if a == 0 {
            return 0;
        }
        let e = self.log[a as usize] as usize + self.order - self.log[b as usize] as usize;
        self.exp[e % self.order]
    }
}

/// A shortened binary BCH code correcting `t` errors.
#[derive(Debug, Clone)]
pub struct BchCodec {
    spec: CodecSpec,
    gf: Gf,
    /// Generator polynomial over GF(2), low degree first.
    generator: Vec<bool>,
}

impl BchCodec {
    pub fn new(spec: CodecSpec) -> Result<Self> {
        spec.validate()?;
        let (gf, generator) = Self::design(spec.codeword_len, spec.correctable)?;
        let parity = generator.len() - 1;
        let capacity = spec.codeword_len.saturating_sub(parity);
        if spec.message_len > capacity {
            return Err(invalid(format!(
                "BCH code with N = {}, t = {} carries at most {} message bits, {} requested",
                spec.codeword_len, spec.correctable, capacity, spec.message_len
            )));
        }
        Ok(Self {
            spec: CodecSpec {
                scheme: CodecScheme::Concrete,
                ..spec
            },
            gf,
            generator,
        })
    }

    /// Largest message length a BCH code with these `N`, `t` supports.
    pub fn max_message_len(codeword_len: usize, correctable: usize) -> Result<usize> {
        let (_, g) = Self::design(codeword_len, correctable)?;
        Ok(codeword_len.saturating_sub(g.len() - 1))
    }

    fn design(codeword_len: usize, t: usize) -> Result<(Gf, Vec<bool>)> {
        let m = (2..=16)
            .find(|&m| (1usize << m) > codeword_len)
            .ok_or_else(|| invalid(format!("codeword length {codeword_len} exceeds 2^16 - 1")))?;
        let gf = Gf::new(m);
        let n = gf.order;
        if 2 * t + 1 > n {
            return Err(invalid(format!("t = {t} too large for BCH length {n}")));
        }
        // generator = product of minimal polynomials of α^1 .. α^{2t}
        let mut covered = vec![false; n];
        let mut generator: Vec<u16> = vec![1];
        for i in 1..=2 * t {
            if covered[i % n] {
                continue;
            }
            let mut coset = Vec::new();
            let mut e = i % n;
            while !covered[e] {
                covered[e] = true;
                coset.push(e);
                e = (2 * e) % n;
            }
            let mut minimal: Vec<u16> = vec![1];
            for &e in &coset {
                minimal = poly_mul_gf(&gf, &minimal, &[gf.alpha_pow(e), 1]);
            }
            generator = poly_mul_gf(&gf, &generator, &minimal);
        }
        let generator: Vec<bool> = generator
            .iter()
            .map(|&c| {
                debug_assert!(c <= 1, "minimal polynomial coefficient outside GF(2)");
                c == 1
            })
            .collect();
        Ok((gf, generator))
    }

    pub fn spec(&self) -> CodecSpec {
        self.spec
    }

    pub fn parity_len(&self) -> usize {
        self.generator.len() - 1
    }

    pub fn encode(&self, message: &BitString) -> Result<BitString> {
        check_len("message", self.spec.message_len, message.len())?;
        let r = self.parity_len();
        let big_n = self.spec.codeword_len;
        let mut word = vec![false; big_n];
        for (i, b) in message.iter().enumerate() {
            word[r + i] = b;
        }
        // remainder of x^r u(x) modulo g(x)
        let mut rem = word.clone();
        for i in (r..big_n).rev() {
            if rem[i] {
                for (j, &g) in self.generator.iter().enumerate() {
                    rem[i - r + j] ^= g;
                }
            }
        }
        word[..r].copy_from_slice(&rem[..r]);
        Ok(BitString::from_bools(word))
    }

    pub fn decode(&self, received: &BitString) -> Result<BitString> {
        let big_n = self.spec.codeword_len;
        check_len("received word", big_n, received.len())?;
        let t = self.spec.correctable;
        let gf = &self.gf;
        let ones: Vec<usize> = (0..big_n).filter(|&i| received.get(i)).collect();
        let syndromes: Vec<u16> = (1..=2 * t)
            .map(|j| ones.iter().fold(0u16, |acc, &i| acc ^ gf.alpha_pow(i * j)))
            .collect();

        let mut word = received.clone();
        if syndromes.iter().any(|&s| s != 0) {
            let locator = berlekamp_massey(gf, &syndromes);
            let degree = locator.len() - 1;
            if degree > t {
                return Err(Error::DecodeFailure);
            }
            let mut roots = 0;
            for i in 0..big_n {
                // Λ(α^{-i}) = 0 marks an error at position i
                let x = gf.alpha_pow(gf.order - (i % gf.order));
                if poly_eval(gf, &locator, x) == 0 {
                    word.flip(i);
                    roots += 1;
                }
            }
            if roots != degree {
                return Err(Error::DecodeFailure);
            }
        }
        let r = self.parity_len();
        let n = self.spec.message_len;
        if (r + n..big_n).any(|i| word.get(i)) {
            return Err(Error::DecodeFailure);
        }
        Ok(word.slice(r, n))
    }
}

fn poly_mul_gf(gf: &Gf, a: &[u16], b: &[u16]) -> Vec<u16> {
    let mut out = vec![0u16; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] ^= gf.mul(x, y);
        }
    }
    out
}

fn poly_eval(gf: &Gf, poly: &[u16], x: u16) -> u16 {
    poly.iter().rev().fold(0u16, |acc, &c| gf.mul(acc, x) ^ c)
}

/// Error-locator polynomial Λ(x) (low degree first, Λ_0 = 1) from syndromes S_1..S_2t.
fn berlekamp_massey(gf: &Gf, syndromes: &[u16]) -> Vec<u16> {
    let mut lambda: Vec<u16> = vec![1];
    let mut prev: Vec<u16> = vec![1];
    let mut len = 0usize;
    let mut shift = 1usize;
    let mut prev_disc: u16 = 1;
    for k in 0..syndromes.len() {
        let mut disc = syndromes[k];
        for i in 1..=len.min(lambda.len() - 1) {
            disc ^= gf.mul(lambda[i], syndromes[k - i]);
        }
        if disc == 0 {
            shift += 1;
            continue;
        }
        let coef = gf.div(disc, prev_disc);
        let mut next = lambda.clone();
        if next.len() < prev.len() + shift {
            next.resize(prev.len() + shift, 0);
        }
        for (i, &p) in prev.iter().enumerate() {
            next[i + shift] ^= gf.mul(coef, p);
        }
        if 2 * len <= k {
            prev = lambda;
            len = k + 1 - len;
            prev_disc = disc;
            shift = 1;
        } else {
            shift += 1;
        }
        lambda = next;
    }
    while lambda.len() > 1 && *lambda.last().unwrap() == 0 {
        lambda.pop();
    }
    lambda
}
