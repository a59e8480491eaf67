//! Closed-form quantities: bit-error rate, decryption-failure bound, monogamy
//! bounds, the unclonability slack `τ`, the asymptotic security region, and
//! the tables behind the published figures.

use std::f64::consts::{E, LOG2_E};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::channel::{noisy_ber, ChannelConvention, ChannelParams};
use crate::error::{invalid, Error, Result};
use crate::protocol::ProtocolParams;

/// Per-mode bit-error rate of honest decryption, `½ Erfc(α √cosh r)`.
pub fn ber_analytic(alpha: f64, squeezing: f64) -> f64 {
    0.5 * erfc(alpha * squeezing.cosh().sqrt())
}

/// Binary entropy in bits; `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// `x ln(x / y)` with `0 ln 0 = 0`.
fn xlogx_over_y(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

/// Binary Kullback-Leibler divergence (nats) for `a, b ∈ (0, 1)`.
pub fn dkl_binary(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0) {
        return Err(invalid(format!("KL divergence needs a, b in (0, 1), got ({a}, {b})")));
    }
    Ok(dkl_unchecked(a, b))
}

fn dkl_unchecked(a: f64, b: f64) -> f64 {
    xlogx_over_y(a, b) + xlogx_over_y(1.0 - a, 1.0 - b)
}

/// Chernoff bound `exp[-N D((t+1)/N ‖ β)]` on decoding more than `t` flips
/// among `N` Bernoulli(β) bits; 1 when `β ≥ (t+1)/N`.
pub fn eps_df_from_ber(codeword_len: usize, correctable: usize, ber: f64) -> f64 {
    let n = codeword_len as f64;
    let a = (correctable + 1) as f64 / n;
    if correctable + 1 > codeword_len || ber >= a {
        return 1.0;
    }
    if ber <= 0.0 {
        return 0.0;
    }
    (-n * dkl_unchecked(a, ber)).exp()
}

/// Decryption-failure parameter for `(N, t, α, r)`.
pub fn eps_df(codeword_len: usize, correctable: usize, alpha: f64, squeezing: f64) -> f64 {
    eps_df_from_ber(codeword_len, correctable, ber_analytic(alpha, squeezing))
}

fn check_even_modes(num_modes: usize) -> Result<()> {
    if num_modes == 0 || !num_modes.is_multiple_of(2) {
        return Err(invalid(format!("number of modes must be even and positive, got {num_modes}")));
    }
    Ok(())
}

fn check_radius(delta: f64, eps: f64) -> Result<()> {
    if !(delta >= 0.0 && eps >= 0.0) || !delta.is_finite() || !eps.is_finite() {
        return Err(invalid(format!("error radii must be >= 0, got ({delta}, {eps})")));
    }
    Ok(())
}

/// Natural log of `C(M, M/2)^{-1} Σ_k C(M/2, k)² (2√(δε))^k`.
pub fn ln_monogamy_bound_exact(num_modes: usize, delta: f64, eps: f64) -> Result<f64> {
    check_even_modes(num_modes)?;
    check_radius(delta, eps)?;
    let half = num_modes / 2;
    let x = 2.0 * (delta * eps).sqrt();
    // ln C(M, M/2) accumulated as Σ ln((half + i) / i)
    let ln_central: f64 = (1..=half)
        .map(|i| ((half + i) as f64 / i as f64).ln())
        .sum();
    if x == 0.0 {
        return Ok(-ln_central);
    }
    let ln_x = x.ln();
    // ln of term k relative to term 0: Σ_{j≤k} [2 ln((half-j+1)/j) + ln x]
    let mut ln_terms = Vec::with_capacity(half + 1);
    let mut acc = 0.0;
    ln_terms.push(acc);
    for k in 1..=half {
        acc += 2.0 * ((half - k + 1) as f64 / k as f64).ln() + ln_x;
        ln_terms.push(acc);
    }
    let max = ln_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = ln_terms.iter().map(|l| (l - max).exp()).sum();
    Ok(max + sum.ln() - ln_central)
}

/// Winning-probability bound of the partial monogamy game (exact sum).
pub fn monogamy_bound_exact(num_modes: usize, delta: f64, eps: f64) -> Result<f64> {
    ln_monogamy_bound_exact(num_modes, delta, eps).map(f64::exp)
}

/// Relaxed form `√e (½ + √(δε))^{M/2}`.
pub fn monogamy_bound_relaxed(num_modes: usize, delta: f64, eps: f64) -> Result<f64> {
    check_even_modes(num_modes)?;
    check_radius(delta, eps)?;
    Ok(E.sqrt() * (0.5 + (delta * eps).sqrt()).powf(num_modes as f64 / 2.0))
}

/// `τ = N/2 + (N/2 - t) log₂(1 + 2α) + t + ½ log₂ e`, real-valued arguments.
pub fn tau_real(codeword_len: f64, correctable: f64, alpha: f64) -> f64 {
    let half = codeword_len / 2.0;
    half + (half - correctable) * (1.0 + 2.0 * alpha).log2() + correctable + 0.5 * LOG2_E
}

/// Unclonability slack exponent `τ(N, t, α)`; requires `t ≤ N/2`.
pub fn tau(codeword_len: usize, correctable: usize, alpha: f64) -> Result<f64> {
    if 2 * correctable > codeword_len {
        return Err(invalid(format!(
            "tau needs t <= N/2, got t = {correctable}, N = {codeword_len}"
        )));
    }
    Ok(tau_real(codeword_len as f64, correctable as f64, alpha))
}

/// `log₂` of the unclipped winning-probability bound, `τ - n`.
pub fn log2_win_bound(params: &ProtocolParams) -> Result<f64> {
    Ok(tau(params.codeword_len, params.correctable, params.alpha)? - params.message_len as f64)
}

/// `min(1, 2^{-n+τ})`.
pub fn win_bound(params: &ProtocolParams) -> Result<f64> {
    log2_win_bound(params).map(|l| l.min(0.0).exp2())
}

/// `h(β) - (½ - β)(1 - log₂(1 + 2α))`; negative where security is
/// achievable asymptotically.
pub fn asymptotic_margin(alpha: f64, squeezing: f64) -> f64 {
    let beta = ber_analytic(alpha, squeezing);
    binary_entropy(beta) - (0.5 - beta) * (1.0 - (1.0 + 2.0 * alpha).log2())
}

/// Message length a capacity-approaching code carries, `N (1 - h(β))`.
pub fn capacity_message_len(codeword_len: f64, ber: f64) -> f64 {
    codeword_len * (1.0 - binary_entropy(ber))
}

/// Winning-probability bound of qubit conjugate coding, `(½ + 1/(2√2))^n`.
pub fn conjugate_coding_bound(message_len: u32) -> f64 {
    (0.5 + 0.5 * std::f64::consts::FRAC_1_SQRT_2).powi(message_len as i32)
}

/// Blind-guess probability `2^{-n}`.
pub fn ideal_guess(message_len: u32) -> f64 {
    (-(message_len as f64)).exp2()
}

/// All closed-form figures of merit for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecurityReport {
    pub beta: f64,
    pub eps_df: f64,
    pub tau: f64,
    pub log2_win_bound: f64,
    pub win_bound: f64,
    pub asymptotic_margin: f64,
    pub params: ProtocolParams,
}

pub fn security_report(params: &ProtocolParams) -> Result<SecurityReport> {
    params.validate()?;
    let beta = ber_analytic(params.alpha, params.squeezing);
    let t = tau(params.codeword_len, params.correctable, params.alpha)?;
    let log2_win = t - params.message_len as f64;
    Ok(SecurityReport {
        beta,
        eps_df: eps_df_from_ber(params.codeword_len, params.correctable, beta),
        tau: t,
        log2_win_bound: log2_win,
        win_bound: log2_win.min(0.0).exp2(),
        asymptotic_margin: asymptotic_margin(params.alpha, params.squeezing),
        params: *params,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureId {
    /// Asymptotic margin over the (α, r) plane.
    Margin,
    /// Noisy BER versus squeezing for several transmittances.
    BerSqueezing,
    /// Noisy BER over the (T, ξ) plane.
    BerChannel,
    /// Winning-probability curves versus message length.
    WinLength,
}

impl FigureId {
    pub const ALL: [FigureId; 4] = [FigureId::Margin, FigureId::BerSqueezing, FigureId::BerChannel, FigureId::WinLength];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Margin => "margin",
            FigureId::BerSqueezing => "ber_squeezing",
            FigureId::BerChannel => "ber_channel",
            FigureId::WinLength => "win_length",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| invalid(format!("unknown figure id '{s}' (expected margin, ber_squeezing, ber_channel or win_length)")))
    }
}

/// One grid axis: explicit values or an inclusive linear range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { min: f64, max: f64, points: usize },
}

impl Axis {
    pub fn fixed(v: f64) -> Self {
        Axis::Values(vec![v])
    }

    pub fn range(min: f64, max: f64, points: usize) -> Self {
        Axis::Range { min, max, points }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let vals = match self {
            Axis::Values(v) => v.clone(),
            Axis::Range { min, max, points } => match points {
                0 => Vec::new(),
                1 => vec![*min],
                &p => (0..p)
                    .map(|i| min + (max - min) * i as f64 / (p - 1) as f64)
                    .collect(),
            },
        };
        if vals.is_empty() || vals.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid axis must hold at least one finite value"));
        }
        Ok(vals)
    }
}

/// Grid for [`emit_figure_data`]. Each figure reads only the axes it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub alpha: Axis,
    pub squeezing: Axis,
    pub transmittance: Axis,
    pub excess_noise: Axis,
    pub message_len: Axis,
    /// `t / N` used for the CV curve of `win_length`.
    pub correctable_fraction: f64,
}

impl GridSpec {
    /// Default grid for each table.
    pub fn default_for(figure: FigureId) -> Self {
        match figure {
            FigureId::Margin => GridSpec {
                alpha: Axis::range(0.01, 1.0, 100),
                squeezing: Axis::range(2.5, 5.0, 51),
                transmittance: Axis::fixed(1.0),
                excess_noise: Axis::fixed(0.0),
                message_len: Axis::fixed(1.0),
                correctable_fraction: 0.035,
            },
            FigureId::BerSqueezing => GridSpec {
                alpha: Axis::fixed(0.4),
                squeezing: Axis::range(2.0, 5.0, 61),
                transmittance: Axis::Values(vec![1.0, 0.95, 0.9, 0.8, 0.7, 0.6]),
                excess_noise: Axis::fixed(0.001),
                message_len: Axis::fixed(1.0),
                correctable_fraction: 0.035,
            },
            FigureId::BerChannel => GridSpec {
                alpha: Axis::fixed(0.4),
                squeezing: Axis::fixed(3.6),
                transmittance: Axis::range(0.5, 1.0, 51),
                excess_noise: Axis::range(0.0, 0.1, 51),
                message_len: Axis::fixed(1.0),
                correctable_fraction: 0.035,
            },
            FigureId::WinLength => GridSpec {
                alpha: Axis::fixed(0.4),
                squeezing: Axis::fixed(3.6),
                transmittance: Axis::fixed(1.0),
                excess_noise: Axis::fixed(0.0),
                message_len: Axis::range(1.0, 2000.0, 2000),
                correctable_fraction: 0.035,
            },
        }
    }
}

/// A numeric table with named columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Rows of one plot-ready table. Columns: grid coordinates, then values.
///
/// - `margin`: `alpha, r, margin`
/// - `ber_squeezing`: `r, transmittance, excess_noise, ber_noisy` (α from the grid)
/// - `ber_channel`: `transmittance, excess_noise, ber_noisy` (α, r from the grid)
/// - `win_length`: `n, codeword_len, ideal, conjugate_coding, cv_bound`, where
///   `N = n / (1 - h(β))` and `t = correctable_fraction · N`
pub fn emit_figure_data(figure: FigureId, grid: &GridSpec) -> Result<Table> {
    match figure {
        FigureId::Margin => {
            let mut table = Table::new(&["alpha", "r", "margin"]);
            for r in grid.squeezing.values()? {
                for a in grid.alpha.values()? {
                    check_alpha_r(a, r)?;
                    table.rows.push(vec![a, r, asymptotic_margin(a, r)]);
                }
            }
            Ok(table)
        }
        FigureId::BerSqueezing => {
            let alpha = single(&grid.alpha, "alpha")?;
            let xi = single(&grid.excess_noise, "excess_noise")?;
            let mut table = Table::new(&["r", "transmittance", "excess_noise", "ber_noisy"]);
            for t in grid.transmittance.values()? {
                let ch = ChannelParams::new(t, xi, ChannelConvention::Linear)?;
                for r in grid.squeezing.values()? {
                    check_alpha_r(alpha, r)?;
                    table.rows.push(vec![r, t, xi, noisy_ber(alpha, r, &ch)]);
                }
            }
            Ok(table)
        }
        FigureId::BerChannel => {
            let alpha = single(&grid.alpha, "alpha")?;
            let r = single(&grid.squeezing, "squeezing")?;
            check_alpha_r(alpha, r)?;
            let mut table = Table::new(&["transmittance", "excess_noise", "ber_noisy"]);
            for t in grid.transmittance.values()? {
                for xi in grid.excess_noise.values()? {
                    let ch = ChannelParams::new(t, xi, ChannelConvention::Linear)?;
                    table.rows.push(vec![t, xi, noisy_ber(alpha, r, &ch)]);
                }
            }
            Ok(table)
        }
        FigureId::WinLength => {
            let alpha = single(&grid.alpha, "alpha")?;
            let r = single(&grid.squeezing, "squeezing")?;
            check_alpha_r(alpha, r)?;
            let frac = grid.correctable_fraction;
            if !(0.0..0.5).contains(&frac) {
                return Err(invalid(format!("correctable fraction must lie in [0, 0.5), got {frac}")));
            }
            let rate = 1.0 - binary_entropy(ber_analytic(alpha, r));
            let mut table = Table::new(&["n", "codeword_len", "ideal", "conjugate_coding", "cv_bound"]);
            for n in grid.message_len.values()? {
                if n < 1.0 || n.fract() != 0.0 {
                    return Err(invalid(format!("message length {n} must be a positive integer")));
                }
                let big_n = n / rate;
                let log2_bound = tau_real(big_n, frac * big_n, alpha) - n;
                table.rows.push(vec![
                    n,
                    big_n,
                    ideal_guess(n as u32),
                    conjugate_coding_bound(n as u32),
                    log2_bound.min(0.0).exp2(),
                ]);
            }
            Ok(table)
        }
    }
}

fn single(axis: &Axis, name: &str) -> Result<f64> {
    match axis.values()?.as_slice() {
        [v] => Ok(*v),
        _ => Err(invalid(format!("axis '{name}' must be a single value for this figure"))),
    }
}

fn check_alpha_r(alpha: f64, r: f64) -> Result<()> {
    if !(alpha > 0.0) || !(r >= 0.0) {
        return Err(invalid(format!("need alpha > 0 and r >= 0, got ({alpha}, {r})")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ber_reference_values() {
        assert!((ber_analytic(0.4, 3.4) - 0.014_233_207_919_441_75).abs() < 1e-14);
        assert!((ber_analytic(0.4, 0.0) - 0.285_803_822_476_665_76).abs() < 1e-14);
        assert!((ber_analytic(1e-12, 2.0) - 0.5).abs() < 1e-11);
    }

    #[test]
    fn ber_strictly_decreasing() {
        let mut prev = 1.0;
        for i in 0..50 {
            let b = ber_analytic(0.4, i as f64 * 0.1);
            assert!(b < prev);
            prev = b;
        }
        let mut prev = 1.0;
        for i in 1..50 {
            let b = ber_analytic(i as f64 * 0.02, 3.0);
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert!((binary_entropy(0.014) - 0.106_273_693_084_659_82).abs() < 1e-14);
        for &x in &[0.01, 0.2, 0.37] {
            assert!((binary_entropy(x) - binary_entropy(1.0 - x)).abs() < 1e-15);
        }
        assert_eq!(binary_entropy(0.0), 0.0);
    }

    #[test]
    fn kl_values() {
        assert_eq!(dkl_binary(0.3, 0.3).unwrap(), 0.0);
        assert!((dkl_binary(0.036, 0.0143).unwrap() - 0.011_777_971_528_191_785).abs() < 1e-15);
        assert!(dkl_binary(0.0, 0.5).is_err());
        assert!(dkl_binary(0.5, 1.0).is_err());
        for i in 1..20 {
            for j in 1..20 {
                assert!(dkl_binary(i as f64 / 20.0, j as f64 / 20.0).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn eps_df_reference_and_degenerate() {
        let v = eps_df(1000, 35, 0.4, 3.4);
        assert!((v - 6.919_314_261_377_7e-6).abs() < 1e-15);
        // β ≥ (t+1)/N -> 1
        assert_eq!(eps_df_from_ber(100, 4, 0.05), 1.0);
        assert_eq!(eps_df_from_ber(100, 4, 0.2), 1.0);
    }

    #[test]
    fn monogamy_small_cases() {
        assert!((monogamy_bound_exact(2, 0.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((monogamy_bound_exact(4, 1.0 / 16.0, 1.0 / 16.0).unwrap() - 97.0 / 384.0).abs() < 1e-12);
        assert!((monogamy_bound_relaxed(2, 0.0, 0.0).unwrap() - E.sqrt() / 2.0).abs() < 1e-15);
        assert!((monogamy_bound_relaxed(10, 0.25, 1.0).unwrap() - E.sqrt()).abs() < 1e-12);
        assert!(monogamy_bound_exact(3, 0.1, 0.1).is_err());
        assert!(monogamy_bound_relaxed(0, 0.1, 0.1).is_err());
        assert!(monogamy_bound_exact(4, -0.1, 0.1).is_err());
    }

    #[test]
    fn tau_values() {
        assert!((tau(1000, 35, 0.4).unwrap() - 930.039_909_068_496_3).abs() < 1e-9);
        assert!((tau(100, 0, 0.0).unwrap() - (50.0 + 0.5 * LOG2_E)).abs() < 1e-12);
        assert!(tau(10, 6, 0.4).is_err());
        let p = ProtocolParams::new(892, 1000, 35, 0.4, 3.4).unwrap();
        assert_eq!(win_bound(&p).unwrap(), 1.0);
        assert!((log2_win_bound(&p).unwrap() - 38.04).abs() < 0.01);
    }

    #[test]
    fn margin_examples() {
        assert!(asymptotic_margin(0.4, 4.0) < 0.0);
        assert!((asymptotic_margin(1e-9, 3.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn conjugate_bound_values() {
        assert!((conjugate_coding_bound(1) - 0.853_553_390_593_273_8).abs() < 1e-15);
        let ratio = conjugate_coding_bound(30) / ideal_guess(30);
        assert!((ratio / (1.0 + std::f64::consts::FRAC_1_SQRT_2).powi(30) - 1.0).abs() < 1e-12);
        assert!((conjugate_coding_bound(100) - (100.0 * 0.853_553_390_593_273_8f64.ln()).exp()).abs() < 1e-18);
    }

    #[test]
    fn capacity_length() {
        let n = capacity_message_len(1000.0, ber_analytic(0.4, 3.4));
        assert!((n - 892.297_682_555_974).abs() < 1e-9);
    }

    #[test]
    fn figure_ids_parse() {
        for f in FigureId::ALL {
            assert_eq!(f.name().parse::<FigureId>().unwrap(), f);
        }
        assert!("scatter".parse::<FigureId>().is_err());
    }

    #[test]
    fn ber_squeezing_contains_reference_row() {
        let t = emit_figure_data(FigureId::BerSqueezing, &GridSpec::default_for(FigureId::BerSqueezing)).unwrap();
        let row = t
            .rows
            .iter()
            .find(|r| r[0] == 3.5 && r[1] == 0.8)
            .expect("grid includes r = 3.5, T = 0.8");
        assert!((row[3] - 0.182).abs() < 0.002);
    }

    #[test]
    fn win_length_curves_ordered() {
        let t = emit_figure_data(FigureId::WinLength, &GridSpec::default_for(FigureId::WinLength)).unwrap();
        assert_eq!(t.rows.len(), 2000);
        for row in &t.rows {
            assert!(row[2] <= row[3] && row[3] <= 1.0 && row[4] <= 1.0);
        }
        // the CV bound only becomes non-trivial beyond ~10^2 message bits
        assert_eq!(t.rows[9][4], 1.0);
        assert!(t.rows[1999][4] < 0.1);
    }

    #[test]
    fn single_axis_required() {
        let mut g = GridSpec::default_for(FigureId::BerChannel);
        g.squeezing = Axis::range(3.0, 4.0, 3);
        assert!(emit_figure_data(FigureId::BerChannel, &g).is_err());
    }
}
