use cvue::bounds::{
    asymptotic_margin, ber_analytic, binary_entropy, dkl_binary, eps_df, eps_df_from_ber, monogamy_bound_exact,
    monogamy_bound_relaxed, tau,
};
use cvue::channel::{noisy_ber, noisy_variance, ChannelConvention, ChannelParams};
use cvue::protocol::{run_round_trip, ProtocolParams};
use cvue::stats::binomial_sigmas;
use proptest::prelude::*;

fn choose(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Direct evaluation of the monogamy sum with exact integer binomials.
fn monogamy_direct(num_modes: u64, delta: f64, eps: f64) -> f64 {
    let h = num_modes / 2;
    let x = 2.0 * (delta * eps).sqrt();
    let total: f64 = (0..=h).map(|k| (choose(h, k) * choose(h, k)) as f64 * x.powi(k as i32)).sum();
    total / choose(num_modes, h) as f64
}

#[test]
fn monogamy_equals_one_on_the_vandermonde_line() {
    for n in (2..=64).step_by(2) {
        for &delta in &[0.5, 0.25, 0.125, 1.0] {
            let eps = 0.25 / delta;
            let v = monogamy_bound_exact(n, delta, eps).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "N = {n}: {v}");
        }
    }
}

#[test]
fn monogamy_matches_integer_evaluation() {
    for n in (2..=60).step_by(2) {
        for &(d, e) in &[(0.0, 0.0), (1.0 / 16.0, 1.0 / 16.0), (0.01, 0.2), (0.1, 0.1)] {
            let want = monogamy_direct(n, d, e);
            let got = monogamy_bound_exact(n as usize, d, e).unwrap();
            assert!((got / want - 1.0).abs() < 1e-12, "N = {n} ({d}, {e}): {got} vs {want}");
        }
    }
    assert!((monogamy_bound_exact(4, 1.0 / 16.0, 1.0 / 16.0).unwrap() - 97.0 / 384.0).abs() < 1e-15);
}

#[test]
fn monogamy_rejects_bad_arguments() {
    assert!(monogamy_bound_exact(3, 0.1, 0.1).is_err());
    assert!(monogamy_bound_exact(0, 0.1, 0.1).is_err());
    assert!(monogamy_bound_exact(4, -0.1, 0.1).is_err());
    assert!(monogamy_bound_relaxed(4, 0.1, f64::NAN).is_err());
}

#[test]
fn chernoff_bound_dominates_exact_tail() {
    for &(n, t, beta) in &[(100usize, 5usize, 0.01), (1000, 35, 0.0142), (200, 20, 0.05), (64, 3, 0.02)] {
        let mut below = 0.0;
        let mut term = (1.0f64 - beta).powi(n as i32);
        for k in 0..=t {
            below += term;
            term *= (n - k) as f64 / (k + 1) as f64 * beta / (1.0 - beta);
        }
        let exact = 1.0 - below;
        assert!(eps_df_from_ber(n, t, beta) >= exact, "({n}, {t}, {beta})");
    }
}

#[test]
fn eps_df_from_kl_definition() {
    let beta = ber_analytic(0.4, 3.4);
    let a: f64 = 36.0 / 1000.0;
    let kl = a * (a / beta).ln() + (1.0 - a) * ((1.0 - a) / (1.0 - beta)).ln();
    assert!((eps_df(1000, 35, 0.4, 3.4) / (-1000.0 * kl).exp() - 1.0).abs() < 1e-12);
    assert!((dkl_binary(a, beta).unwrap() - kl).abs() < 1e-15);
}

#[test]
fn tau_direct_evaluation() {
    let want = 500.0 + 465.0 * 1.8f64.log2() + 35.0 + 0.5 / std::f64::consts::LN_2;
    assert!((tau(1000, 35, 0.4).unwrap() - want).abs() < 1e-10);
    assert!(tau(1000, 501, 0.4).is_err());
}

#[test]
fn margin_sign_regions() {
    let grid: Vec<f64> = (0..200).map(|i| 0.005 + i as f64 * (2.0 - 0.005) / 199.0).collect();
    assert!(grid.iter().all(|&a| asymptotic_margin(a, 3.0) >= 0.0));
    assert!(grid.iter().any(|&a| asymptotic_margin(a, 4.0) < 0.0));
    // margin at α = 0.4, r = 4 from its two terms
    let b = ber_analytic(0.4, 4.0);
    let want = binary_entropy(b) - (0.5 - b) * (1.0 - 1.8f64.log2());
    assert!((asymptotic_margin(0.4, 4.0) - want).abs() < 1e-15);
}

#[test]
fn simulated_channel_matches_closed_form() {
    let points = [(1.0, 0.0), (0.9, 0.0), (0.8, 0.001), (0.6, 0.05), (0.5, 0.1)];
    for (i, &(t, xi)) in points.iter().enumerate() {
        let ch = ChannelParams::new(t, xi, ChannelConvention::Linear).unwrap();
        let p = ProtocolParams::new(100, 200, 10, 0.4, 3.5).unwrap();
        let rep = run_round_trip(&p, 1000, 100 + i as u64, Some(&ch)).unwrap();
        let want = noisy_ber(0.4, 3.5, &ch);
        let sig = binomial_sigmas(rep.flipped_modes, rep.modes, want);
        assert!(sig < 5.0, "T {t} xi {xi}: {} vs {want}", rep.flip_rate);
    }
}

#[test]
fn symplectic_convention_scales_amplitude_by_root_t() {
    let ch = ChannelParams::new(0.5, 0.02, ChannelConvention::Symplectic).unwrap();
    let p = ProtocolParams::new(100, 200, 10, 0.4, 3.0).unwrap();
    let rep = run_round_trip(&p, 1000, 3, Some(&ch)).unwrap();
    let v = noisy_variance(3.0, &ch);
    let want = 0.5 * libm::erfc(0.5f64.sqrt() * 0.4 / v.sqrt());
    assert!(binomial_sigmas(rep.flipped_modes, rep.modes, want) < 5.0);
}

proptest! {
    #[test]
    fn exact_monogamy_never_exceeds_relaxed(half in 1usize..200, d in 0.0f64..0.25, e in 0.0f64..0.25) {
        let n = 2 * half;
        let exact = monogamy_bound_exact(n, d, e).unwrap();
        let relaxed = monogamy_bound_relaxed(n, d, e).unwrap();
        prop_assert!(exact <= relaxed * (1.0 + 1e-12));
    }

    #[test]
    fn eps_df_monotone_in_correction_radius(n in 50usize..2000, beta in 0.001f64..0.1) {
        let mut last = f64::INFINITY;
        for t in (0..n / 4).step_by((n / 40).max(1)) {
            let v = eps_df_from_ber(n, t, beta);
            prop_assert!(v <= last + 1e-300);
            prop_assert!((0.0..=1.0).contains(&v));
            last = v;
        }
    }

    #[test]
    fn noisy_ber_between_clean_and_half(t in 0.01f64..=1.0, xi in 0.0f64..0.5, r in 0.0f64..5.0) {
        let ch = ChannelParams::new(t, xi, ChannelConvention::Linear).unwrap();
        let b = noisy_ber(0.4, r, &ch);
        prop_assert!(b >= ber_analytic(0.4, r) - 1e-15);
        prop_assert!(b < 0.5);
    }
}
