use cvue::eb::{eb_rejection_oracle, game_equivalence_test, rejection_oracle_check, sample_eb_mode, RestrictedEprSpec};
use cvue::gaussian::Quadrature;
use cvue::protocol::{sample_truncated_k, ProtocolParams};
use cvue::rng::master_rng;
use cvue::stats::ks_two_sample;
use nalgebra::Matrix2;

/// Window probability of `N(c, cosh r / 2)` over `(c - α, c + α)` by
/// midpoint integration of the density.
fn acceptance_by_quadrature(alpha: f64, r: f64) -> f64 {
    let var = 0.5 * r.cosh();
    let steps = 200_000;
    let h = 2.0 * alpha / steps as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
    (0..steps)
        .map(|i| {
            let x = -alpha + (i as f64 + 0.5) * h;
            norm * (-x * x / (2.0 * var)).exp() * h
        })
        .sum()
}

#[test]
fn acceptance_probability_matches_quadrature() {
    for &(r, a) in &[(3.4, 0.4), (1.0, 0.4), (0.5, 1.5), (2.0, 0.05)] {
        let spec = RestrictedEprSpec::new(r, a, false).unwrap();
        let want = acceptance_by_quadrature(a, r);
        assert!((spec.acceptance_probability() - want).abs() < 1e-9, "r {r} a {a}");
    }
}

#[test]
fn steered_mode_is_squeezed_coherent() {
    let (r, a): (f64, f64) = (1.7, 0.6);
    let c = r.cosh();
    for bit in [false, true] {
        let spec = RestrictedEprSpec::new(r, a, bit).unwrap();
        for (dir, want) in [
            (Quadrature::Q, Matrix2::new(1.0 / c, 0.0, 0.0, c)),
            (Quadrature::P, Matrix2::new(c, 0.0, 0.0, 1.0 / c)),
        ] {
            let mut rng = master_rng(3);
            for _ in 0..200 {
                let (s, _) = eb_rejection_oracle(&spec, dir, &mut rng).unwrap();
                assert!((s.mode.covariance() - want).abs().max() < 1e-10);
                let centre = if bit { -a } else { a };
                // steered mean sits at the threshold plus the bit's offset
                let mean = s.mode.displacement()[dir.offset()];
                assert!((mean - ((s.u - centre) * r.tanh() + centre)).abs() < 1e-10);
                assert!(s.mode.displacement()[1 - dir.offset()].abs() < 1e-10);
            }
        }
    }
}

#[test]
fn rejection_oracle_agrees_with_direct_sampler() {
    for (bit, dir) in [(false, Quadrature::Q), (true, Quadrature::P)] {
        let spec = RestrictedEprSpec::new(3.4, 0.4, bit).unwrap();
        let rep = rejection_oracle_check(&spec, dir, 20_000, 11).unwrap();
        assert!(rep.ratio_sigmas < 5.0, "{rep:?}");
        assert!(rep.ks_u.p_value > 1e-3, "{rep:?}");
        assert!(rep.max_covariance_error < 1e-10);
        assert!(rep.max_displacement_error < 1e-10);
    }
}

#[test]
fn implied_thresholds_follow_key_generation_law() {
    let (r, a) = (3.4, 0.4);
    let mut rng = master_rng(12);
    let mut eb = Vec::new();
    let mut direct = Vec::new();
    for i in 0..40_000 {
        let spec = RestrictedEprSpec::new(r, a, i % 2 == 0).unwrap();
        let s = sample_eb_mode(&spec, Quadrature::from_bit(i % 3 == 0), &mut rng);
        eb.push(spec.threshold(s.u));
        direct.push(sample_truncated_k(a, r, &mut rng));
    }
    let ks = ks_two_sample(&eb, &direct);
    assert!(ks.p_value > 1e-3, "{ks:?}");
}

#[test]
fn both_preparations_give_the_same_game() {
    let p = ProtocolParams::new(40, 100, 5, 0.4, 3.4).unwrap();
    let rep = game_equivalence_test(&p, 400, 21).unwrap();
    assert_eq!(rep.modes, 40_000);
    assert!(rep.p_value > 1e-3, "{rep:?}");
    assert!(rep.ks_k.p_value > 1e-3, "{rep:?}");
    assert!(rep.max_candidate_error < 1e-9);
    assert!(rep.windows_respected);
}
