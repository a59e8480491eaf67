//! Keys and the encrypt/decrypt round trip of the squeezed-state scheme.
//!
//! A codeword bit `c_i` is carried by mode `i` as a displacement
//! `α(-1)^{c_i} + k_i` along the squeezed quadrature selected by `φ_i`.
//! The receiver homodynes along `φ_i` and thresholds at `k_i`.

use nalgebra::{Matrix2, Vector2};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::channel::ChannelParams;
use crate::codec::{base_decrypt, base_encrypt, Codec, CodecScheme, CodecSpec, Decoder};
use crate::error::{invalid, Error, Result};
use crate::gaussian::{ModeState, Quadrature};
use crate::rng::trial_rng;
use crate::stats::{sample_truncated_normal, wilson_interval, Interval, Z95};

/// Scheme parameters for one security level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    #[serde(default = "default_security_param")]
    pub security_param: u32,
    /// `n`
    pub message_len: usize,
    /// `N`, even
    pub codeword_len: usize,
    /// `t`
    pub correctable: usize,
    /// `z`; equals `n` for the one-time pad
    pub pad_len: usize,
    pub alpha: f64,
    /// squeezing parameter `r`
    pub squeezing: f64,
}

fn default_security_param() -> u32 {
    1
}

impl ProtocolParams {
    /// Parameters with `z = n`.
    pub fn new(
        message_len: usize,
        codeword_len: usize,
        correctable: usize,
        alpha: f64,
        squeezing: f64,
    ) -> Result<Self> {
        let p = Self {
            security_param: default_security_param(),
            message_len,
            codeword_len,
            correctable,
            pad_len: message_len,
            alpha,
            squeezing,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.security_param == 0 {
            return Err(invalid("security parameter must be positive"));
        }
        if self.codeword_len == 0 || !self.codeword_len.is_multiple_of(2) {
            return Err(invalid(format!(
                "codeword length N = {} must be even and positive (balanced squeezing directions)",
                self.codeword_len
            )));
        }
        if self.pad_len != self.message_len {
            return Err(invalid(format!(
                "pad length z = {} must equal message length n = {}",
                self.pad_len, self.message_len
            )));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(invalid(format!("displacement alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.squeezing >= 0.0) || !self.squeezing.is_finite() {
            return Err(invalid(format!(
                "squeezing r must be >= 0, got {}",
                self.squeezing
            )));
        }
        self.codec_spec(CodecScheme::Oracle).validate()
    }

    pub fn codec_spec(&self, scheme: CodecScheme) -> CodecSpec {
        CodecSpec {
            message_len: self.message_len,
            codeword_len: self.codeword_len,
            correctable: self.correctable,
            scheme,
        }
    }
}

/// Samples `k ~ Normal(0, ½ cosh r tanh² r)` truncated to `(-α tanh r, α tanh r)`.
/// With `r = 0` the interval collapses and `k = 0`.
pub fn sample_truncated_k<R: Rng + ?Sized>(alpha: f64, squeezing: f64, rng: &mut R) -> f64 {
    if squeezing == 0.0 {
        return 0.0;
    }
    let tanh = squeezing.tanh();
    let sigma = (0.5 * squeezing.cosh()).sqrt() * tanh;
    let bound = alpha * tanh;
    sample_truncated_normal(sigma, -bound, bound, rng)
}

/// Secret key `(s, φ, k)`; the balanced-string label is derived from `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct QecmKey {
    pub s: BitString,
    pub phi: BitString,
    pub k: Vec<f64>,
}

impl QecmKey {
    /// Colexicographic rank of `φ` among the weight-`N/2` strings.
    pub fn label(&self) -> BigUint {
        rank_balanced(&self.phi)
    }

    pub fn direction(&self, mode: usize) -> Quadrature {
        Quadrature::from_bit(self.phi.get(mode))
    }

    /// Checks the structural key invariants against `params`.
    pub fn validate(&self, params: &ProtocolParams) -> Result<()> {
        let n_modes = params.codeword_len;
        crate::codec::check_len("pad s", params.pad_len, self.s.len())?;
        crate::codec::check_len("direction string phi", n_modes, self.phi.len())?;
        crate::codec::check_len("threshold vector k", n_modes, self.k.len())?;
        if self.phi.weight() != n_modes / 2 {
            return Err(invalid(format!(
                "phi has weight {}, expected N/2 = {}",
                self.phi.weight(),
                n_modes / 2
            )));
        }
        let bound = params.alpha * params.squeezing.tanh();
        if let Some(bad) = self
            .k
            .iter()
            .find(|&&k| !(k.abs() < bound || (params.squeezing == 0.0 && k == 0.0)))
        {
            return Err(invalid(format!(
                "threshold {bad} outside (-{bound}, {bound})"
            )));
        }
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of balanced strings of length `n` (`C(n, n/2)`).
pub fn balanced_count(n: usize) -> BigUint {
    binomial(n, n / 2)
}

/// Colex rank: for one-positions `c_1 < … < c_w`, `Σ_j C(c_j, j)`.
pub fn rank_balanced(phi: &BitString) -> BigUint {
    phi.iter()
        .enumerate()
        .filter(|&(_, b)| b)
        .map(|(pos, _)| pos)
        .enumerate()
        .map(|(j, pos)| binomial(pos, j + 1))
        .sum()
}

/// Inverse of [`rank_balanced`] for strings of length `n` (even) and weight `n/2`.
pub fn unrank_balanced(n: usize, label: &BigUint) -> Result<BitString> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(invalid(format!("balanced strings need even positive length, got {n}")));
    }
    if label >= &balanced_count(n) {
        return Err(invalid(format!("label {label} out of range for length {n}")));
    }
    let mut rank = label.clone();
    let mut remaining = n / 2;
    let mut bits = BitString::zeros(n);
    // binom = C(pos, remaining), updated incrementally as pos decreases
    let mut binom = binomial(n - 1, remaining);
    for pos in (0..n).rev() {
        if remaining == 0 {
            break;
        }
        if rank >= binom {
            bits.set(pos, true);
            rank -= &binom;
            // C(pos-1, remaining-1) = C(pos, remaining) * remaining / pos
            binom = if pos == 0 {
                BigUint::zero()
            } else {
                binom * remaining / pos
            };
            remaining -= 1;
        } else if pos > 0 {
            // C(pos-1, remaining) = C(pos, remaining) * (pos - remaining) / pos
            binom = if pos < remaining {
                BigUint::zero()
            } else {
                binom * (pos - remaining) / pos
            };
        }
    }
    Ok(bits)
}

/// Samples a key: uniform pad, uniform balanced `φ`, i.i.d. truncated `k`.
///
/// `φ` is drawn as a uniform `N/2`-subset of mode positions, which is the same
/// distribution as a uniform label.
pub fn key_gen<R: Rng + ?Sized>(params: &ProtocolParams, rng: &mut R) -> Result<QecmKey> {
    params.validate()?;
    if params.squeezing == 0.0 {
        log::warn!("squeezing r = 0: thresholds are all zero and directions give no hiding");
    }
    let n_modes = params.codeword_len;
    let s = BitString::random(params.pad_len, rng);
    let mut phi = BitString::zeros(n_modes);
    for i in sample(rng, n_modes, n_modes / 2) {
        phi.set(i, true);
    }
    let k = (0..n_modes)
        .map(|_| sample_truncated_k(params.alpha, params.squeezing, rng))
        .collect();
    Ok(QecmKey { s, phi, k })
}

/// The cipherstate: one single-mode Gaussian state per codeword bit.
#[derive(Debug, Clone, PartialEq)]
pub struct CipherState {
    pub modes: Vec<ModeState>,
}

impl CipherState {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

/// State of mode `i` for codeword bit `bit`, direction bit `phi` and threshold `k`.
pub fn prepare_mode(bit: bool, phi: bool, k: f64, params: &ProtocolParams) -> ModeState {
    let amp = if bit { -params.alpha } else { params.alpha } + k;
    let c = params.squeezing.cosh();
    let (displacement, diag) = if phi {
        (Vector2::new(0.0, amp), Vector2::new(c, 1.0 / c))
    } else {
        (Vector2::new(amp, 0.0), Vector2::new(1.0 / c, c))
    };
    ModeState::from_parts(displacement, Matrix2::from_diagonal(&diag))
}

/// Places an already-encoded codeword onto modes.
pub fn prepare_cipher(key: &QecmKey, codeword: &BitString, params: &ProtocolParams) -> Result<CipherState> {
    crate::codec::check_len("codeword", params.codeword_len, codeword.len())?;
    Ok(CipherState {
        modes: (0..params.codeword_len)
            .map(|i| prepare_mode(codeword.get(i), key.phi.get(i), key.k[i], params))
            .collect(),
    })
}

/// Encrypts and also returns the codeword the modes carry.
pub fn encrypt_with_codeword(
    key: &QecmKey,
    message: &BitString,
    params: &ProtocolParams,
    codec: &Codec,
) -> Result<(BitString, CipherState)> {
    crate::codec::check_len("message", params.message_len, message.len())?;
    let padded = base_encrypt(&key.s, message)?;
    let codeword = codec.encode(&padded)?;
    let cipher = prepare_cipher(key, &codeword, params)?;
    Ok((codeword, cipher))
}

pub fn encrypt(
    key: &QecmKey,
    message: &BitString,
    params: &ProtocolParams,
    codec: &Codec,
) -> Result<CipherState> {
    encrypt_with_codeword(key, message, params, codec).map(|(_, c)| c)
}

/// Threshold decision: `0` when `(y - gain·k)` has the sign of `gain`
/// (ties decode to 0).
#[inline]
pub fn threshold_bit(outcome: f64, k: f64, gain: f64) -> bool {
    let diff = outcome - gain * k;
    if gain >= 0.0 {
        diff < 0.0
    } else {
        diff > 0.0
    }
}

/// Homodynes every mode along its key direction and thresholds at `gain·k_i`.
/// `gain` is the amplitude factor the modes picked up since preparation
/// (1 for an untouched cipherstate).
pub fn measure_codeword<R: Rng + ?Sized>(
    key: &QecmKey,
    modes: &[ModeState],
    gain: f64,
    rng: &mut R,
) -> Result<BitString> {
    crate::codec::check_len("cipherstate modes", key.phi.len(), modes.len())?;
    Ok(modes
        .iter()
        .enumerate()
        .map(|(i, mode)| {
            let y = mode.homodyne(key.direction(i), rng);
            threshold_bit(y, key.k[i], gain)
        })
        .collect())
}

/// Decrypts with thresholds rescaled by `gain`.
pub fn decrypt_scaled<D: Decoder + ?Sized, R: Rng + ?Sized>(
    key: &QecmKey,
    cipher: &CipherState,
    decoder: &D,
    gain: f64,
    rng: &mut R,
) -> Result<BitString> {
    let received = measure_codeword(key, &cipher.modes, gain, rng)?;
    let padded = decoder.decode(&received)?;
    base_decrypt(&key.s, &padded)
}

/// Decrypts an untouched cipherstate. Decode failures surface as
/// [`Error::DecodeFailure`].
pub fn decrypt<D: Decoder + ?Sized, R: Rng + ?Sized>(
    key: &QecmKey,
    cipher: &CipherState,
    params: &ProtocolParams,
    decoder: &D,
    rng: &mut R,
) -> Result<BitString> {
    crate::codec::check_len("cipherstate modes", params.codeword_len, cipher.len())?;
    decrypt_scaled(key, cipher, decoder, 1.0, rng)
}

/// Empirical decryption-failure statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTripReport {
    pub trials: u64,
    pub failures: u64,
    pub failure_rate: f64,
    /// 95% Wilson interval for the failure rate.
    pub interval: Interval,
    pub modes: u64,
    pub flipped_modes: u64,
    pub flip_rate: f64,
}

/// Runs `trials` independent key/encrypt/decrypt round trips with the oracle
/// codec, optionally through a noisy channel. Trial `i` uses
/// [`trial_rng`]`(seed, i)`.
pub fn run_round_trip(
    params: &ProtocolParams,
    trials: u64,
    seed: u64,
    channel: Option<&ChannelParams>,
) -> Result<RoundTripReport> {
    run_round_trip_with(params, CodecScheme::Oracle, trials, seed, channel)
}

/// [`run_round_trip`] with an explicit error-correction scheme.
pub fn run_round_trip_with(
    params: &ProtocolParams,
    scheme: CodecScheme,
    trials: u64,
    seed: u64,
    channel: Option<&ChannelParams>,
) -> Result<RoundTripReport> {
    params.validate()?;
    if let Some(ch) = channel {
        ch.validate()?;
    }
    let codec = Codec::from_spec(params.codec_spec(scheme))?;
    let (failures, flips) = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<(u64, u64)> {
            let mut rng = trial_rng(seed, i);
            let key = key_gen(params, &mut rng)?;
            let message = BitString::random(params.message_len, &mut rng);
            let (codeword, mut cipher) = encrypt_with_codeword(&key, &message, params, &codec)?;
            let gain = match channel {
                Some(ch) => {
                    cipher = ch.apply(&cipher);
                    ch.amplitude_gain()
                }
                None => 1.0,
            };
            let received = measure_codeword(&key, &cipher.modes, gain, &mut rng)?;
            let flips = received.hamming_distance(&codeword)? as u64;
            let decoded = codec
                .decoder(Some(&codeword))
                .decode(&received)
                .and_then(|padded| base_decrypt(&key.s, &padded));
            let failed = match decoded {
                Ok(m) => m != message,
                Err(Error::DecodeFailure) => true,
                Err(e) => return Err(e),
            };
            Ok((failed as u64, flips))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let modes = trials * params.codeword_len as u64;
    Ok(RoundTripReport {
        trials,
        failures,
        failure_rate: if trials == 0 { 0.0 } else { failures as f64 / trials as f64 },
        interval: wilson_interval(failures, trials, Z95),
        modes,
        flipped_modes: flips,
        flip_rate: if modes == 0 { 0.0 } else { flips as f64 / modes as f64 },
    })
}
