//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use cvue::adversary::{check_against_bound, run_cloning_game, AttackStrategy};
use cvue::bounds::{
    asymptotic_margin, ber_analytic, eps_df, monogamy_bound_exact, monogamy_bound_relaxed, tau, win_bound,
};
use cvue::channel::{noisy_ber, ChannelConvention, ChannelParams};
use cvue::eb::{RejectionOracle, RestrictedEprSpec, rejection_oracle_check};
use cvue::gaussian::Quadrature;
use cvue::protocol::{run_round_trip, sample_truncated_k, ProtocolParams};
use cvue::rng::master_rng;
use cvue::stats::{binomial_sigmas, ks_two_sample, normal_cdf};
use nalgebra::Matrix2;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok { Ok(detail) } else { Err(detail) }
}

fn default_params() -> ProtocolParams {
    ProtocolParams::new(800, 1000, 35, 0.4, 3.4).unwrap()
}

fn ber_reproduction() -> Check {
    let b = ber_analytic(0.4, 3.4);
    ensure((b - 0.014).abs() <= 0.0005, format!("beta = {b:.6}"))
}

fn failure_bound() -> Check {
    let e = eps_df(1000, 35, 0.4, 3.4);
    ensure((5.7e-6..=8.3e-6).contains(&e), format!("eps_df = {e:.4e}"))
}

fn monte_carlo_vs_analytic() -> Check {
    let p = default_params();
    let beta = ber_analytic(0.4, 3.4);
    let bound = eps_df(1000, 35, 0.4, 3.4);
    let rep = run_round_trip(&p, 100_000, 2024, None).map_err(|e| e.to_string())?;
    let sig = binomial_sigmas(rep.flipped_modes, rep.modes, beta);
    let detail = format!(
        "flip rate {:.6} over {} modes ({sig:.2} sigma); {} failures in {} trials, 95% CI [{:.2e}, {:.2e}] vs eps_df {bound:.2e}",
        rep.flip_rate, rep.modes, rep.failures, rep.trials, rep.interval.lower, rep.interval.upper
    );
    ensure(rep.modes >= 1_000_000 && sig < 5.0 && rep.interval.lower <= bound, detail)
}

fn noise_model() -> Check {
    let ch = ChannelParams::new(0.8, 0.001, ChannelConvention::Linear).map_err(|e| e.to_string())?;
    let b = noisy_ber(0.4, 3.5, &ch);
    // direct evaluation: ½ Erfc(Tα / √(T/cosh r + 1 - T + Tξ))
    let v = 0.8 / 3.5f64.cosh() + 0.2 + 0.8 * 0.001;
    let direct = 0.5 * libm::erfc(0.8 * 0.4 / v.sqrt());
    let p = ProtocolParams::new(800, 1000, 35, 0.4, 3.5).unwrap();
    let rep = run_round_trip(&p, 1000, 7, Some(&ch)).map_err(|e| e.to_string())?;
    let sig = binomial_sigmas(rep.flipped_modes, rep.modes, b);
    ensure(
        (b - 0.182).abs() <= 0.002 && (b - direct).abs() < 1e-14 && rep.modes >= 1_000_000 && sig < 5.0,
        format!("noisy BER {b:.6}; simulated {:.6} over {} modes ({sig:.2} sigma)", rep.flip_rate, rep.modes),
    )
}

fn monogamy_identities() -> Check {
    let mut worst_line: f64 = 0.0;
    for n in (2..=64).step_by(2) {
        for &d in &[1.0, 0.5, 0.25, 0.125] {
            let v = monogamy_bound_exact(n, d, 0.25 / d).map_err(|e| e.to_string())?;
            worst_line = worst_line.max((v - 1.0).abs());
        }
    }
    let mut ordered = true;
    for i in 0..10 {
        for j in 0..10 {
            let (d, e) = (0.025 * i as f64, 0.025 * j as f64 + 0.01);
            let n = 2 * (1 + 7 * i + 3 * j);
            let exact = monogamy_bound_exact(n, d, e).map_err(|e| e.to_string())?;
            let relaxed = monogamy_bound_relaxed(n, d, e).map_err(|e| e.to_string())?;
            ordered &= exact <= relaxed * (1.0 + 1e-12);
        }
    }
    let hand = monogamy_bound_exact(4, 1.0 / 16.0, 1.0 / 16.0).map_err(|e| e.to_string())?;
    let hand_err = (hand - 97.0 / 384.0).abs();
    ensure(
        worst_line < 1e-12 && ordered && hand_err < 1e-12,
        format!("Vandermonde gap {worst_line:.1e}; exact <= relaxed on 100 points: {ordered}; N=4 value {hand:.10}"),
    )
}

fn tau_evaluation() -> Check {
    let t = tau(1000, 35, 0.4).map_err(|e| e.to_string())?;
    ensure((t - 930.0).abs() <= 0.1, format!("tau = {t:.6}"))
}

fn asymptotic_region() -> Check {
    let grid: Vec<f64> = (0..200).map(|i| 0.005 + i as f64 * (2.0 - 0.005) / 199.0).collect();
    let min3 = grid.iter().map(|&a| asymptotic_margin(a, 3.0)).fold(f64::INFINITY, f64::min);
    let min4 = grid.iter().map(|&a| asymptotic_margin(a, 4.0)).fold(f64::INFINITY, f64::min);
    ensure(min3 >= 0.0 && min4 < 0.0, format!("min margin r=3: {min3:.4e}, r=4: {min4:.4e}"))
}

fn eb_equivalence() -> Check {
    let (r, a): (f64, f64) = (3.4, 0.4);
    let c = r.cosh();
    let mut rng = master_rng(88);
    let mut eb_k = Vec::with_capacity(100_000);
    let mut direct_k = Vec::with_capacity(100_000);
    let mut cov_err: f64 = 0.0;
    for i in 0..100_000 {
        let bit = i % 2 == 1;
        let dir = Quadrature::from_bit(i % 4 >= 2);
        let spec = RestrictedEprSpec::new(r, a, bit).map_err(|e| e.to_string())?;
        let oracle = RejectionOracle::new(spec, dir).map_err(|e| e.to_string())?;
        let (s, _) = oracle.sample(&mut rng).map_err(|e| e.to_string())?;
        let want = match dir {
            Quadrature::Q => Matrix2::new(1.0 / c, 0.0, 0.0, c),
            Quadrature::P => Matrix2::new(c, 0.0, 0.0, 1.0 / c),
        };
        cov_err = cov_err.max((s.mode.covariance() - want).abs().max());
        eb_k.push(spec.threshold(s.u));
        direct_k.push(sample_truncated_k(a, r, &mut rng));
    }
    let ks = ks_two_sample(&eb_k, &direct_k);
    let spec = RestrictedEprSpec::new(r, a, false).map_err(|e| e.to_string())?;
    let rep = rejection_oracle_check(&spec, Quadrature::Q, 100_000, 5).map_err(|e| e.to_string())?;
    let cdf_value = 2.0 * normal_cdf(a / (0.5 * c).sqrt()) - 1.0;
    ensure(
        ks.p_value > 0.01 && cov_err < 1e-10 && rep.ratio_sigmas < 5.0 && (rep.expected_ratio - cdf_value).abs() < 1e-15,
        format!(
            "KS p = {:.3}; covariance error {cov_err:.1e}; acceptance {:.5} vs {cdf_value:.5} ({:.2} sigma)",
            ks.p_value, rep.acceptance_ratio, rep.ratio_sigmas
        ),
    )
}

fn attack_harness() -> Check {
    let p = default_params();
    let out = run_cloning_game(&p, AttackStrategy::HeterodyneSplit, 1000, 9).map_err(|e| e.to_string())?;
    let modes = out.trials * p.codeword_len as u64;
    let q = 0.5 * libm::erfc(0.4 / (1.0 + 1.0 / 3.4f64.cosh()).sqrt());
    let bob = out.bob_ber.unwrap_or(f64::NAN);
    let flips = (bob * modes as f64).round() as u64;
    let sig = binomial_sigmas(flips, modes, q);
    let mut violations = Vec::new();
    let grid = [
        p,
        ProtocolParams::new(24, 24, 0, 0.2, 4.0).unwrap(),
        ProtocolParams::new(40, 40, 0, 0.3, 5.0).unwrap(),
        ProtocolParams::new(30, 32, 1, 0.1, 3.0).unwrap(),
    ];
    let mut worst: f64 = f64::INFINITY;
    for (i, gp) in grid.iter().enumerate() {
        let trials = if i == 0 { 1000 } else { 20_000 };
        for s in AttackStrategy::ALL {
            let o = run_cloning_game(gp, s, trials, 100 + i as u64).map_err(|e| e.to_string())?;
            let check = check_against_bound(&o, gp).map_err(|e| e.to_string())?;
            worst = worst.min(win_bound(gp).unwrap() - check.win_rate_upper);
            if !check.holds {
                violations.push(format!("{s} at {gp:?}"));
            }
        }
    }
    ensure(
        modes >= 1_000_000 && sig < 5.0 && violations.is_empty(),
        format!("split BER {bob:.6} vs {q:.6} ({sig:.2} sigma); smallest slack {worst:.3e}; violations {violations:?}"),
    )
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 42\ntrials = 50\n[protocol]\nmessage_len = 40\ncodeword_len = 100\ncorrectable = 5\n[ebcheck]\naccepted = 1000\n",
    )
    .map_err(|e| e.to_string())?;
    let cfg = cfg.to_str().unwrap();
    let commands: [&[&str]; 6] = [
        &["keygen"],
        &["roundtrip"],
        &["bounds"],
        &["bounds", "--figure", "win_length"],
        &["attack"],
        &["ebcheck"],
    ];
    let mut differing = Vec::new();
    for cmd in commands {
        let mut args = cmd.to_vec();
        args.extend(["--config", cfg]);
        let run = || Command::new(env!("CARGO_BIN_EXE_cvue")).args(&args).output();
        let (a, b) = (run().map_err(|e| e.to_string())?, run().map_err(|e| e.to_string())?);
        if !a.status.success() || a.stdout.is_empty() || a.stdout != b.stdout {
            differing.push(cmd.join(" "));
        }
    }
    ensure(differing.is_empty(), format!("{} commands, non-identical: {differing:?}", commands.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("BER reproduction", ber_reproduction),
        ("decryption-failure bound", failure_bound),
        ("Monte-Carlo vs analytic", monte_carlo_vs_analytic),
        ("noise model", noise_model),
        ("monogamy bound identities", monogamy_identities),
        ("tau evaluation", tau_evaluation),
        ("asymptotic region", asymptotic_region),
        ("entanglement-based equivalence", eb_equivalence),
        ("attack harness", attack_harness),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} criterion {:>2} {name}: {detail} [{:.1}s]", i + 1, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
