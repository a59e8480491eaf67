//! Monte-Carlo cloning game.
//!
//! Per trial the challenger encrypts a uniform message, Alice splits the
//! cipherstate with a concrete strategy, the key is revealed, and Bob and
//! Charlie decode independently. The players win iff both recover the message.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::bounds::log2_win_bound;
use crate::codec::{base_decrypt, Codec, CodecScheme, Decoder, OracleCodec};
use crate::error::{invalid, Error, Result};
use crate::gaussian::{GaussianState, ModeState, Quadrature};
use crate::protocol::{encrypt_with_codeword, key_gen, measure_codeword, threshold_bit, CipherState, ProtocolParams, QecmKey};
use crate::rng::trial_rng;
use crate::stats::{wilson_interval, Interval, Z95};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackStrategy {
    /// Each mode is mixed with vacuum on a 50/50 beamsplitter; one port per player.
    HeterodyneSplit,
    /// Bob receives the whole cipherstate; Charlie guesses blindly.
    ForwardToBob,
    /// Alice heterodynes every mode before the key is known and hands the same
    /// classical record to both players.
    MeasureGuessBasis,
}

impl AttackStrategy {
    pub const ALL: [AttackStrategy; 3] = [
        AttackStrategy::HeterodyneSplit,
        AttackStrategy::ForwardToBob,
        AttackStrategy::MeasureGuessBasis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackStrategy::HeterodyneSplit => "heterodyne_split",
            AttackStrategy::ForwardToBob => "forward_to_bob",
            AttackStrategy::MeasureGuessBasis => "measure_guess_basis",
        }
    }
}

impl fmt::Display for AttackStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AttackStrategy::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| invalid(format!("unknown attack strategy '{s}'")))
    }
}

/// One player's marginal share of a split cipherstate. `gain` is the factor
/// the share's displacements carry relative to the original cipherstate.
#[derive(Debug, Clone, PartialEq)]
pub struct CipherHalf {
    pub modes: Vec<ModeState>,
    pub gain: f64,
}

/// Output of [`heterodyne_split`]: for every cipher mode the joint two-mode
/// state of (Bob's port, Charlie's port). Ports are correlated, so the game
/// samples them jointly.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCipher {
    pub pairs: Vec<GaussianState>,
}

/// Amplitude factors of the two beamsplitter ports for an input on port 0.
pub const BOB_GAIN: f64 = std::f64::consts::FRAC_1_SQRT_2;
pub const CHARLIE_GAIN: f64 = -std::f64::consts::FRAC_1_SQRT_2;

impl SplitCipher {
    /// Marginal shares `(Bob, Charlie)`.
    pub fn halves(&self) -> Result<(CipherHalf, CipherHalf)> {
        let mut bob = Vec::with_capacity(self.pairs.len());
        let mut charlie = Vec::with_capacity(self.pairs.len());
        for pair in &self.pairs {
            bob.push(pair.mode(0)?);
            charlie.push(pair.mode(1)?);
        }
        Ok((
            CipherHalf {
                modes: bob,
                gain: BOB_GAIN,
            },
            CipherHalf {
                modes: charlie,
                gain: CHARLIE_GAIN,
            },
        ))
    }

    /// Joint homodyne of both ports along the revealed key directions;
    /// returns the two received words `(Bob, Charlie)`.
    pub fn measure<R: Rng + ?Sized>(&self, key: &QecmKey, rng: &mut R) -> Result<(BitString, BitString)> {
        crate::codec::check_len("split modes", key.phi.len(), self.pairs.len())?;
        let mut bob = BitString::zeros(self.pairs.len());
        let mut charlie = BitString::zeros(self.pairs.len());
        for (i, pair) in self.pairs.iter().enumerate() {
            let dir = key.direction(i);
            let rec = pair.homodyne_sample(0, dir, rng)?;
            bob.set(i, threshold_bit(rec.outcome, key.k[i], BOB_GAIN));
            let rest = rec
                .conditional_state
                .expect("two-mode state keeps one mode after conditioning");
            let y = rest.mode(0)?.homodyne(dir, rng);
            charlie.set(i, threshold_bit(y, key.k[i], CHARLIE_GAIN));
        }
        Ok((bob, charlie))
    }
}

/// Mixes every cipher mode with an independent vacuum on a 50/50 beamsplitter.
pub fn heterodyne_split(cipher: &CipherState) -> Result<SplitCipher> {
    let pairs = cipher
        .modes
        .iter()
        .map(|m| GaussianState::product(&[*m, ModeState::vacuum()])?.apply_beamsplitter((0, 1), 0.5))
        .collect::<Result<Vec<_>>>()?;
    Ok(SplitCipher { pairs })
}

/// Per-mode heterodyne record `(q̂, p̂)` rescaled to the input amplitude.
pub fn heterodyne_measure<R: Rng + ?Sized>(cipher: &CipherState, rng: &mut R) -> Result<Vec<[f64; 2]>> {
    let split = heterodyne_split(cipher)?;
    split
        .pairs
        .iter()
        .map(|pair| {
            let rec = pair.homodyne_sample(0, Quadrature::Q, rng)?;
            let rest = rec
                .conditional_state
                .expect("two-mode state keeps one mode after conditioning");
            let p = rest.mode(0)?.homodyne(Quadrature::P, rng);
            Ok([rec.outcome / BOB_GAIN, p / CHARLIE_GAIN])
        })
        .collect()
}

/// Bits a player reads from a marginal share: homodyne along `φ_i`,
/// threshold at `gain · k_i`.
pub fn measure_half<R: Rng + ?Sized>(half: &CipherHalf, key: &QecmKey, rng: &mut R) -> Result<BitString> {
    measure_codeword(key, &half.modes, half.gain, rng)
}

/// Decodes a marginal share once the key is revealed.
pub fn decode_half<D: Decoder + ?Sized, R: Rng + ?Sized>(
    half: &CipherHalf,
    key: &QecmKey,
    decoder: &D,
    rng: &mut R,
) -> Result<BitString> {
    let received = measure_half(half, key, rng)?;
    base_decrypt(&key.s, &decoder.decode(&received)?)
}

/// Statistics of a cloning-game run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameOutcome {
    pub strategy: AttackStrategy,
    pub trials: u64,
    pub wins: u64,
    pub win_rate: f64,
    /// 95% Wilson interval for the win rate.
    pub interval: Interval,
    pub bob_successes: u64,
    pub charlie_successes: u64,
    /// Per-bit error rates of the received words; `None` for a player who
    /// holds no share.
    pub bob_ber: Option<f64>,
    pub charlie_ber: Option<f64>,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    wins: u64,
    bob_ok: u64,
    charlie_ok: u64,
    bob_flips: u64,
    charlie_flips: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            wins: self.wins + o.wins,
            bob_ok: self.bob_ok + o.bob_ok,
            charlie_ok: self.charlie_ok + o.charlie_ok,
            bob_flips: self.bob_flips + o.bob_flips,
            charlie_flips: self.charlie_flips + o.charlie_flips,
        }
    }
}

/// Decodes a received word; any decode failure yields `None`.
fn recover<D: Decoder>(decoder: &D, key: &QecmKey, received: &BitString) -> Result<Option<BitString>> {
    match decoder.decode(received) {
        Ok(padded) => base_decrypt(&key.s, &padded).map(Some),
        Err(Error::DecodeFailure) => Ok(None),
        Err(e) => Err(e),
    }
}

fn play_trial<R: Rng + ?Sized>(
    params: &ProtocolParams,
    strategy: AttackStrategy,
    codec: &Codec,
    rng: &mut R,
) -> Result<Tally> {
    let message = BitString::random(params.message_len, rng);
    let key = key_gen(params, rng)?;
    let (codeword, cipher) = encrypt_with_codeword(&key, &message, params, codec)?;
    let decoder = codec.decoder(Some(&codeword));

    // Alice acts before the key is revealed; the received words are
    // functions of her shares and the revealed key only.
    let (bob_word, charlie_word) = match strategy {
        AttackStrategy::HeterodyneSplit => {
            let split = heterodyne_split(&cipher)?;
            let (b, c) = split.measure(&key, rng)?;
            (Some(b), Some(c))
        }
        AttackStrategy::ForwardToBob => (Some(measure_codeword(&key, &cipher.modes, 1.0, rng)?), None),
        AttackStrategy::MeasureGuessBasis => {
            let record = heterodyne_measure(&cipher, rng)?;
            let word: BitString = record
                .iter()
                .enumerate()
                .map(|(i, qp)| threshold_bit(qp[key.direction(i).offset()], key.k[i], 1.0))
                .collect();
            (Some(word.clone()), Some(word))
        }
    };

    let mut tally = Tally::default();
    let bob_msg = match &bob_word {
        Some(w) => {
            tally.bob_flips = w.hamming_distance(&codeword)? as u64;
            recover(&decoder, &key, w)?
        }
        None => Some(BitString::random(params.message_len, rng)),
    };
    let charlie_msg = match &charlie_word {
        Some(w) => {
            tally.charlie_flips = w.hamming_distance(&codeword)? as u64;
            recover(&decoder, &key, w)?
        }
        None => Some(BitString::random(params.message_len, rng)),
    };
    let bob_ok = bob_msg.as_ref() == Some(&message);
    let charlie_ok = charlie_msg.as_ref() == Some(&message);
    tally.bob_ok = bob_ok as u64;
    tally.charlie_ok = charlie_ok as u64;
    tally.wins = (bob_ok && charlie_ok) as u64;
    Ok(tally)
}

/// Plays `trials` rounds of the cloning game. Uses the oracle codec, so a
/// player decodes correctly iff their received word has at most `t` flips.
pub fn run_cloning_game(
    params: &ProtocolParams,
    strategy: AttackStrategy,
    trials: u64,
    seed: u64,
) -> Result<GameOutcome> {
    params.validate()?;
    let codec = Codec::Oracle(OracleCodec::new(params.codec_spec(CodecScheme::Oracle))?);
    let tally = (0..trials)
        .into_par_iter()
        .map(|i| play_trial(params, strategy, &codec, &mut trial_rng(seed, i)))
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
    let modes = (trials * params.codeword_len as u64) as f64;
    let ber = |flips: u64| (trials > 0).then(|| flips as f64 / modes);
    Ok(GameOutcome {
        strategy,
        trials,
        wins: tally.wins,
        win_rate: if trials == 0 { 0.0 } else { tally.wins as f64 / trials as f64 },
        interval: wilson_interval(tally.wins, trials, Z95),
        bob_successes: tally.bob_ok,
        charlie_successes: tally.charlie_ok,
        bob_ber: ber(tally.bob_flips),
        charlie_ber: match strategy {
            AttackStrategy::ForwardToBob => None,
            _ => ber(tally.charlie_flips),
        },
    })
}

/// Comparison of an empirical win rate with `min(1, 2^{-n+τ})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub log2_bound: f64,
    pub bound: f64,
    /// The bound is 1 and says nothing.
    pub vacuous: bool,
    pub win_rate_upper: f64,
    pub holds: bool,
    /// `bound - win_rate_upper`.
    pub slack: f64,
}

pub fn check_against_bound(outcome: &GameOutcome, params: &ProtocolParams) -> Result<BoundCheck> {
    let log2_bound = log2_win_bound(params)?;
    let bound = log2_bound.min(0.0).exp2();
    let upper = outcome.interval.upper;
    Ok(BoundCheck {
        log2_bound,
        bound,
        vacuous: bound >= 1.0,
        win_rate_upper: upper,
        holds: upper <= bound,
        slack: bound - upper,
    })
}

/// Displacement of a mode along its own squeezed axis; test helper for the
/// split shares.
pub fn axis_displacement(mode: &ModeState, direction: Quadrature) -> f64 {
    let d: Vector2<f64> = mode.displacement();
    d[direction.offset()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::make_squeezed_coherent;

    #[test]
    fn split_halves_displacement_and_noise() {
        let r = 2.0;
        let alpha = 0.5;
        let m = make_squeezed_coherent([alpha, 0.0], r, Quadrature::Q).unwrap();
        let split = heterodyne_split(&CipherState { modes: vec![m] }).unwrap();
        let (bob, charlie) = split.halves().unwrap();
        let want_var = 0.5 * (0.5 + 1.0 / (2.0 * r.cosh()));
        for half in [&bob, &charlie] {
            let mode = half.modes[0];
            assert!((axis_displacement(&mode, Quadrature::Q) - half.gain * alpha).abs() < 1e-12);
            assert!((mode.marginal_variance(Quadrature::Q) - want_var).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_splits_into_vacua() {
        let split = heterodyne_split(&CipherState {
            modes: vec![ModeState::vacuum()],
        })
        .unwrap();
        let (b, c) = split.halves().unwrap();
        assert!((b.modes[0].covariance() - nalgebra::Matrix2::identity()).abs().max() < 1e-12);
        assert!((c.modes[0].covariance() - nalgebra::Matrix2::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in AttackStrategy::ALL {
            assert_eq!(s.name().parse::<AttackStrategy>().unwrap(), s);
        }
        assert!("clone_everything".parse::<AttackStrategy>().is_err());
    }

    #[test]
    fn zero_trials_is_empty() {
        let p = ProtocolParams::new(4, 8, 1, 0.4, 1.0).unwrap();
        let out = run_cloning_game(&p, AttackStrategy::HeterodyneSplit, 0, 1).unwrap();
        assert_eq!(out.wins, 0);
        assert_eq!(out.trials, 0);
        assert_eq!(out.bob_ber, None);
    }
}
