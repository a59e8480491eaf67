//! Entanglement-based preparation.
//!
//! The challenger holds one half of a displaced two-mode squeezed state and
//! homodynes it; the outcome `u` steers Alice's half to a squeezed coherent
//! state. Restricting `u` to a window of width `2α` around `±α` yields exactly
//! the prepare-and-send distribution of `(k, cipherstate)`, with
//! `k = (u ∓ α) tanh r`. The restricted state is never built as an object:
//! its statistics are the truncated marginal of `u` plus a Gaussian
//! conditional, which is what [`sample_eb_mode`] draws.

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bits::BitString;
use crate::codec::{base_encrypt, Codec, CodecScheme, OracleCodec};
use crate::error::{invalid, Result};
use crate::gaussian::{GaussianState, ModeState, Quadrature};
use crate::protocol::{key_gen, measure_codeword, prepare_cipher, CipherState, ProtocolParams, QecmKey};
use crate::rng::trial_rng;
use crate::stats::{ks_two_sample, normal_cdf, sample_truncated_normal, two_proportion_z, KsResult};

/// One restricted displaced EPR pair carrying codeword bit `bit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestrictedEprSpec {
    pub squeezing: f64,
    pub alpha: f64,
    pub bit: bool,
}

impl RestrictedEprSpec {
    pub fn new(squeezing: f64, alpha: f64, bit: bool) -> Result<Self> {
        if !(squeezing > 0.0 && squeezing.is_finite()) {
            return Err(invalid(format!(
                "entanglement-based preparation needs r > 0, got {squeezing}"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha must be > 0, got {alpha}")));
        }
        Ok(Self {
            squeezing,
            alpha,
            bit,
        })
    }

    /// `α(-1)^c`.
    pub fn centre(&self) -> f64 {
        if self.bit {
            -self.alpha
        } else {
            self.alpha
        }
    }

    /// Open window the challenger's outcome is restricted to.
    pub fn window(&self) -> (f64, f64) {
        (self.centre() - self.alpha, self.centre() + self.alpha)
    }

    /// Standard deviation of the challenger's unrestricted outcome.
    pub fn outcome_sigma(&self) -> f64 {
        (0.5 * self.squeezing.cosh()).sqrt()
    }

    /// Probability that an unrestricted outcome lands in the window.
    pub fn acceptance_probability(&self) -> f64 {
        2.0 * normal_cdf(self.alpha / self.outcome_sigma()) - 1.0
    }

    /// Threshold implied by outcome `u`.
    pub fn threshold(&self, u: f64) -> f64 {
        (u - self.centre()) * self.squeezing.tanh()
    }

    /// Alice's mode after the challenger observed `u` along `direction`.
    pub fn conditional_mode(&self, u: f64, direction: Quadrature) -> ModeState {
        let amp = self.centre() + self.threshold(u);
        let c = self.squeezing.cosh();
        let (d, diag) = match direction {
            Quadrature::Q => (Vector2::new(amp, 0.0), Vector2::new(1.0 / c, c)),
            Quadrature::P => (Vector2::new(0.0, amp), Vector2::new(c, 1.0 / c)),
        };
        ModeState::from_parts(d, Matrix2::from_diagonal(&diag))
    }
}

/// A challenger outcome with the conditional state it steers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EbSample {
    pub u: f64,
    pub mode: ModeState,
}

/// Draws `u` from the truncated marginal and returns the steered mode.
pub fn sample_eb_mode<R: Rng + ?Sized>(spec: &RestrictedEprSpec, direction: Quadrature, rng: &mut R) -> EbSample {
    let offset = sample_truncated_normal(spec.outcome_sigma(), -spec.alpha, spec.alpha, rng);
    let u = spec.centre() + offset;
    EbSample {
        u,
        mode: spec.conditional_mode(u, direction),
    }
}

/// Challenger outcomes, implied thresholds and the steered cipherstate.
#[derive(Debug, Clone, PartialEq)]
pub struct EbChallengeRecord {
    pub u: Vec<f64>,
    pub k: Vec<f64>,
    pub codeword: BitString,
    pub cipher: CipherState,
}

impl EbChallengeRecord {
    /// Key whose thresholds are the ones this record's outcomes fixed.
    pub fn key(&self, s: &BitString, phi: &BitString) -> QecmKey {
        QecmKey {
            s: s.clone(),
            phi: phi.clone(),
            k: self.k.clone(),
        }
    }
}

/// Entanglement-based encryption of `message` under pad `s` and directions `φ`.
pub fn eb_prepare<R: Rng + ?Sized>(
    params: &ProtocolParams,
    s: &BitString,
    phi: &BitString,
    message: &BitString,
    codec: &Codec,
    rng: &mut R,
) -> Result<EbChallengeRecord> {
    params.validate()?;
    crate::codec::check_len("direction string phi", params.codeword_len, phi.len())?;
    crate::codec::check_len("message", params.message_len, message.len())?;
    let codeword = codec.encode(&base_encrypt(s, message)?)?;
    let mut u = Vec::with_capacity(params.codeword_len);
    let mut k = Vec::with_capacity(params.codeword_len);
    let mut modes = Vec::with_capacity(params.codeword_len);
    for i in 0..params.codeword_len {
        let spec = RestrictedEprSpec::new(params.squeezing, params.alpha, codeword.get(i))?;
        let sample = sample_eb_mode(&spec, Quadrature::from_bit(phi.get(i)), rng);
        k.push(spec.threshold(sample.u));
        u.push(sample.u);
        modes.push(sample.mode);
    }
    Ok(EbChallengeRecord {
        u,
        k,
        codeword,
        cipher: CipherState { modes },
    })
}

/// Physical route to [`sample_eb_mode`]: a displaced two-mode squeezed state
/// whose challenger half is homodyned, discarding outcomes outside the window.
#[derive(Debug, Clone)]
pub struct RejectionOracle {
    spec: RestrictedEprSpec,
    direction: Quadrature,
    state: GaussianState,
}

impl RejectionOracle {
    pub fn new(spec: RestrictedEprSpec, direction: Quadrature) -> Result<Self> {
        let r = spec.squeezing;
        // mode 0 belongs to the challenger, mode 1 to Alice
        let q_squeezed = ModeState::new(Vector2::zeros(), Matrix2::from_diagonal(&Vector2::new((-r).exp(), r.exp())))?;
        let p_squeezed = ModeState::new(Vector2::zeros(), Matrix2::from_diagonal(&Vector2::new(r.exp(), (-r).exp())))?;
        let mut tms = GaussianState::product(&[q_squeezed, p_squeezed])?
        .apply_beamsplitter((0, 1), 0.5)?;
        if direction == Quadrature::P {
            let quarter = std::f64::consts::FRAC_PI_2;
            tms = tms.rotate(0, quarter)?.rotate(1, quarter)?;
        }
        let shift = match direction {
            Quadrature::Q => [spec.centre(), 0.0],
            Quadrature::P => [0.0, spec.centre()],
        };
        let state = tms.displace(0, shift)?.displace(1, shift)?;
        Ok(Self {
            spec,
            direction,
            state,
        })
    }

    pub fn state(&self) -> &GaussianState {
        &self.state
    }

    /// Repeats the challenger's homodyne until it lands in the window.
    /// Returns the accepted sample and the number of attempts it took.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(EbSample, u64)> {
        let (lo, hi) = self.spec.window();
        let challenger = self.state.mode(0)?;
        let mut attempts = 0;
        loop {
            attempts += 1;
            let u = challenger.homodyne(self.direction, rng);
            if u > lo && u < hi {
                let rest = self
                    .state
                    .condition(0, self.direction, u)?
                    .expect("two-mode state keeps one mode after conditioning");
                return Ok((EbSample { u, mode: rest.mode(0)? }, attempts));
            }
        }
    }
}

pub fn eb_rejection_oracle<R: Rng + ?Sized>(
    spec: &RestrictedEprSpec,
    direction: Quadrature,
    rng: &mut R,
) -> Result<(EbSample, u64)> {
    RejectionOracle::new(*spec, direction)?.sample(rng)
}

/// Rejection oracle against the direct sampler.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionReport {
    pub accepted: u64,
    pub attempts: u64,
    pub acceptance_ratio: f64,
    pub expected_ratio: f64,
    /// Distance of the accepted count from its expectation, in binomial
    /// standard errors.
    pub ratio_sigmas: f64,
    /// KS test of accepted outcomes against [`sample_eb_mode`] outcomes.
    pub ks_u: KsResult,
    /// Largest entry-wise gap between the steered covariance and the
    /// squeezed-coherent covariance.
    pub max_covariance_error: f64,
    /// Largest gap between the steered displacement and its closed form.
    pub max_displacement_error: f64,
}

pub fn rejection_oracle_check(
    spec: &RestrictedEprSpec,
    direction: Quadrature,
    accepted: u64,
    seed: u64,
) -> Result<RejectionReport> {
    let oracle = RejectionOracle::new(*spec, direction)?;
    let mut rng = trial_rng(seed, 0);
    let mut direct_rng = trial_rng(seed, 1);
    let mut attempts = 0;
    let mut oracle_u = Vec::with_capacity(accepted as usize);
    let mut direct_u = Vec::with_capacity(accepted as usize);
    let mut cov_err: f64 = 0.0;
    let mut disp_err: f64 = 0.0;
    for _ in 0..accepted {
        let (s, n) = oracle.sample(&mut rng)?;
        attempts += n;
        let want = spec.conditional_mode(s.u, direction);
        cov_err = cov_err.max((s.mode.covariance() - want.covariance()).abs().max());
        disp_err = disp_err.max((s.mode.displacement() - want.displacement()).abs().max());
        oracle_u.push(s.u);
        direct_u.push(sample_eb_mode(spec, direction, &mut direct_rng).u);
    }
    let expected = spec.acceptance_probability();
    let ratio = if attempts == 0 { 0.0 } else { accepted as f64 / attempts as f64 };
    // the number of accepts in a fixed number of attempts is binomial
    let ratio_sigmas = crate::stats::binomial_sigmas(accepted, attempts, expected);
    Ok(RejectionReport {
        accepted,
        attempts,
        acceptance_ratio: ratio,
        expected_ratio: expected,
        ratio_sigmas,
        ks_u: ks_two_sample(&oracle_u, &direct_u),
        max_covariance_error: cov_err,
        max_displacement_error: disp_err,
    })
}

/// Prepare-and-send versus entanglement-based statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub trials: u64,
    pub modes: u64,
    pub flips_prepare_and_send: u64,
    pub flips_entanglement_based: u64,
    pub beta_prepare_and_send: f64,
    pub beta_entanglement_based: f64,
    pub z: f64,
    pub p_value: f64,
    /// KS test of EB-derived thresholds against key-generation thresholds.
    pub ks_k: KsResult,
    /// Largest distance of `u` from the nearer of its two candidates
    /// `k / tanh r ± α`.
    pub max_candidate_error: f64,
    /// Every `u` satisfied `|u| < 2α` and lay in its window.
    pub windows_respected: bool,
}

struct TrialStats {
    flips_ps: u64,
    flips_eb: u64,
    k_ps: Vec<f64>,
    k_eb: Vec<f64>,
    candidate_err: f64,
    windows_ok: bool,
}

fn equivalence_trial<R: Rng + ?Sized>(params: &ProtocolParams, codec: &Codec, rng: &mut R) -> Result<TrialStats> {
    let message = BitString::random(params.message_len, rng);
    let key = key_gen(params, rng)?;
    let padded = base_encrypt(&key.s, &message)?;
    let codeword = codec.encode(&padded)?;
    let cipher = prepare_cipher(&key, &codeword, params)?;
    let flips_ps = measure_codeword(&key, &cipher.modes, 1.0, rng)?.hamming_distance(&codeword)? as u64;

    let eb_key = key_gen(params, rng)?;
    let record = eb_prepare(params, &eb_key.s, &eb_key.phi, &message, codec, rng)?;
    let eb_key = record.key(&eb_key.s, &eb_key.phi);
    let flips_eb =
        measure_codeword(&eb_key, &record.cipher.modes, 1.0, rng)?.hamming_distance(&record.codeword)? as u64;

    let tanh = params.squeezing.tanh();
    let alpha = params.alpha;
    let mut candidate_err: f64 = 0.0;
    let mut windows_ok = true;
    for (i, (&u, &k)) in record.u.iter().zip(&record.k).enumerate() {
        let base = k / tanh;
        let err = (u - (base + alpha)).abs().min((u - (base - alpha)).abs());
        candidate_err = candidate_err.max(err);
        let spec = RestrictedEprSpec::new(params.squeezing, alpha, record.codeword.get(i))?;
        let (lo, hi) = spec.window();
        windows_ok &= u > lo && u < hi && u.abs() < 2.0 * alpha;
    }
    Ok(TrialStats {
        flips_ps,
        flips_eb,
        k_ps: key.k,
        k_eb: record.k,
        candidate_err,
        windows_ok,
    })
}

/// Runs `trials` encryptions each way with independent keys and messages.
pub fn game_equivalence_test(params: &ProtocolParams, trials: u64, seed: u64) -> Result<EquivalenceReport> {
    params.validate()?;
    if params.squeezing <= 0.0 {
        return Err(invalid("entanglement-based preparation needs r > 0"));
    }
    let codec = Codec::Oracle(OracleCodec::new(params.codec_spec(CodecScheme::Oracle))?);
    let per_trial: Vec<TrialStats> = (0..trials)
        .into_par_iter()
        .map(|i| equivalence_trial(params, &codec, &mut trial_rng(seed, i)))
        .collect::<Result<_>>()?;
    let modes = trials * params.codeword_len as u64;
    let mut flips_ps = 0;
    let mut flips_eb = 0;
    let mut k_ps = Vec::with_capacity(modes as usize);
    let mut k_eb = Vec::with_capacity(modes as usize);
    let mut candidate_err: f64 = 0.0;
    let mut windows_ok = true;
    for t in per_trial {
        flips_ps += t.flips_ps;
        flips_eb += t.flips_eb;
        k_ps.extend(t.k_ps);
        k_eb.extend(t.k_eb);
        candidate_err = candidate_err.max(t.candidate_err);
        windows_ok &= t.windows_ok;
    }
    let (z, p_value) = two_proportion_z(flips_ps, modes, flips_eb, modes);
    let rate = |f: u64| if modes == 0 { 0.0 } else { f as f64 / modes as f64 };
    Ok(EquivalenceReport {
        trials,
        modes,
        flips_prepare_and_send: flips_ps,
        flips_entanglement_based: flips_eb,
        beta_prepare_and_send: rate(flips_ps),
        beta_entanglement_based: rate(flips_eb),
        z,
        p_value,
        ks_k: ks_two_sample(&k_ps, &k_eb),
        max_candidate_error: candidate_err,
        windows_respected: windows_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::make_squeezed_coherent;
    use crate::protocol::sample_truncated_k;
    use crate::rng::master_rng;

    #[test]
    fn spec_rejects_zero_squeezing() {
        assert!(RestrictedEprSpec::new(0.0, 0.4, false).is_err());
        assert!(RestrictedEprSpec::new(1.0, 0.0, false).is_err());
        let p = ProtocolParams::new(4, 8, 1, 0.4, 0.0).unwrap();
        assert!(game_equivalence_test(&p, 1, 0).is_err());
        let s = BitString::zeros(4);
        let phi = BitString::from_bools(vec![true, true, true, true, false, false, false, false]);
        let codec = Codec::from_spec(p.codec_spec(CodecScheme::Oracle)).unwrap();
        assert!(eb_prepare(&p, &s, &phi, &s, &codec, &mut master_rng(0)).is_err());
    }

    #[test]
    fn acceptance_probability_reference() {
        let spec = RestrictedEprSpec::new(3.4, 0.4, false).unwrap();
        assert!((spec.acceptance_probability() - 0.116_130_318_575_063_84).abs() < 1e-13);
    }

    #[test]
    fn samples_stay_in_window_with_exact_covariance() {
        let mut rng = master_rng(5);
        for bit in [false, true] {
            let spec = RestrictedEprSpec::new(1.3, 0.7, bit).unwrap();
            let (lo, hi) = spec.window();
            for dir in [Quadrature::Q, Quadrature::P] {
                let want = make_squeezed_coherent([0.0, 0.0], 1.3, dir).unwrap().covariance();
                for _ in 0..2000 {
                    let s = sample_eb_mode(&spec, dir, &mut rng);
                    assert!(s.u > lo && s.u < hi);
                    assert_eq!(s.mode.covariance(), want);
                    assert!((s.mode.mean(dir) - (spec.centre() + spec.threshold(s.u))).abs() < 1e-15);
                    assert_eq!(s.mode.mean(dir.conjugate()), 0.0);
                }
            }
        }
    }

    #[test]
    fn rejection_oracle_steers_the_same_state() {
        for dir in [Quadrature::Q, Quadrature::P] {
            for bit in [false, true] {
                let spec = RestrictedEprSpec::new(2.0, 0.5, bit).unwrap();
                let report = rejection_oracle_check(&spec, dir, 3000, 11).unwrap();
                assert!(report.max_covariance_error < 1e-10, "{report:?}");
                assert!(report.max_displacement_error < 1e-10, "{report:?}");
                assert!(report.ks_u.p_value > 1e-3, "{report:?}");
                assert!(report.ratio_sigmas < 5.0, "{report:?}");
            }
        }
    }

    #[test]
    fn derived_thresholds_match_key_generation() {
        let spec = RestrictedEprSpec::new(3.4, 0.4, true).unwrap();
        let mut rng = master_rng(3);
        let eb: Vec<f64> = (0..20000)
            .map(|_| spec.threshold(sample_eb_mode(&spec, Quadrature::Q, &mut rng).u))
            .collect();
        let ps: Vec<f64> = (0..20000).map(|_| sample_truncated_k(0.4, 3.4, &mut rng)).collect();
        assert!(ks_two_sample(&eb, &ps).p_value > 1e-3);
    }

    #[test]
    fn small_equivalence_run() {
        let p = ProtocolParams::new(10, 40, 2, 0.4, 1.5).unwrap();
        let rep = game_equivalence_test(&p, 300, 9).unwrap();
        assert!(rep.windows_respected);
        assert!(rep.max_candidate_error < 1e-12);
        assert!(rep.z.abs() < 5.0, "{rep:?}");
    }
}
