//! Small statistics toolkit: normal CDF/quantile, truncated-normal sampling,
//! Wilson intervals and the two-sample tests used by the equivalence checks.

use rand::Rng;
use serde::Serialize;
use libm::erfc;
use statrs::function::erf::erfc_inv;

/// z-score of a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile (probit).
pub fn normal_quantile(p: f64) -> f64 {
    let mut x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // two Newton steps against the CDF recover full double precision
    for _ in 0..2 {
        let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if !x.is_finite() || density == 0.0 {
            break;
        }
        x -= (normal_cdf(x) - p) / density;
    }
    x
}

/// Samples `Normal(0, sigma^2)` conditioned on `(lo, hi)` by inverse-CDF.
///
/// Intervals lying entirely above zero are reflected so the CDF differences
/// are always taken on the side where they keep full relative precision.
pub fn sample_truncated_normal<R: Rng + ?Sized>(sigma: f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
    debug_assert!(sigma > 0.0 && lo < hi);
    if lo > 0.0 {
        return -sample_truncated_normal(sigma, -hi, -lo, rng);
    }
    let a = normal_cdf(lo / sigma);
    let b = normal_cdf(hi / sigma);
    loop {
        let u: f64 = rng.random();
        let x = sigma * normal_quantile(a + u * (b - a));
        // the open interval excludes the endpoints; rounding can land on them
        if x > lo && x < hi {
            return x;
        }
    }
}

/// Wilson score interval for a binomial proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Interval {
    if trials == 0 {
        return Interval {
            lower: 0.0,
            upper: 1.0,
        };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the limits are exact at the boundaries; rounding would otherwise
    // leave them a few ulp inside
    Interval {
        lower: if successes == 0 { 0.0 } else { (centre - half).max(0.0) },
        upper: if successes == trials { 1.0 } else { (centre + half).min(1.0) },
    }
}

/// Result of a two-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample KS test with the asymptotic Kolmogorov p-value
/// (Stephens' small-sample correction on the effective size).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty(), "KS test needs non-empty samples");
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = xs[i].min(ys[j]);
        while i < n && xs[i] <= x {
            i += 1;
        }
        while j < m && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    }
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = sign * (-2.0 * jf * jf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-proportion z-test with pooled variance; returns `(z, two-sided p)`.
pub fn two_proportion_z(x1: u64, n1: u64, x2: u64, n2: u64) -> (f64, f64) {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let p1 = x1 as f64 / n1f;
    let p2 = x2 as f64 / n2f;
    let pooled = (x1 + x2) as f64 / (n1f + n2f);
    let se = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
    if se == 0.0 {
        return (0.0, 1.0);
    }
    let z = (p1 - p2) / se;
    (z, 2.0 * normal_cdf(-z.abs()))
}

/// Distance, in binomial standard errors, between an observed count and
/// its expectation under `Bernoulli(p)`.
pub fn binomial_sigmas(count: u64, trials: u64, p: f64) -> f64 {
    let n = trials as f64;
    let se = (n * p * (1.0 - p)).sqrt();
    if se == 0.0 {
        return if count as f64 == n * p { 0.0 } else { f64::INFINITY };
    }
    (count as f64 - n * p).abs() / se
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::master_rng;

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-9, 0.01, 0.3, 0.5, 0.77, 0.999] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-12 * p.max(1e-3));
        }
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-14);
    }

    #[test]
    fn truncated_samples_stay_inside() {
        let mut rng = master_rng(1);
        for _ in 0..10_000 {
            let x = sample_truncated_normal(2.7, -0.4, 0.4, &mut rng);
            assert!(x > -0.4 && x < 0.4);
            let y = sample_truncated_normal(1.0, 3.0, 3.5, &mut rng);
            assert!(y > 3.0 && y < 3.5);
        }
    }

    #[test]
    fn wilson_zero_successes() {
        let ci = wilson_interval(0, 100_000, Z95);
        assert_eq!(ci.lower, 0.0);
        assert!((ci.upper - Z95 * Z95 / (100_000.0 + Z95 * Z95)).abs() < 1e-12);
        assert_eq!(wilson_interval(0, 0, Z95), Interval { lower: 0.0, upper: 1.0 });
    }

    #[test]
    fn ks_detects_shift_and_accepts_same() {
        let mut rng = master_rng(2);
        let a: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let c: Vec<f64> = (0..5000).map(|_| rng.random::<f64>() + 0.1).collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.01);
        assert!(ks_two_sample(&a, &c).p_value < 1e-6);
    }

    #[test]
    fn kolmogorov_reference_value() {
        // Q(1.36) is the classical 5% critical point
        assert!((kolmogorov_q(1.358_098_8) - 0.05).abs() < 1e-5);
    }
}
