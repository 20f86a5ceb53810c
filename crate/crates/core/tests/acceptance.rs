//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release --test acceptance`. Criteria listed in
//! `KNOWN_UNATTAINABLE` are computed faithfully and reported as FAIL; the
//! run only exits nonzero when a criterion disagrees with that list.

use std::process::Command;
use std::time::{Duration, Instant};

use mac_training::asymptotics::{
    asymptotic_rate, expansions_at_approx_optimum, large_block_expansions, LargeBlockExpansions,
};
use mac_training::numerics::harmonic;
use mac_training::optimizer::{self, optimal_eps_bar, quadratic_residual};
use mac_training::rate::{
    self, achievable_rate, expected_log_max, expected_log_max_series, jensen_upper_bound,
};
use mac_training::sim::{
    draw_estimate_gains, empirical_max_estimate_mean, simulate_blocks,
    single_user_scheduling_dominates,
};
use mac_training::{SystemConfig, TrainingPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// 1: the model gives K* = 13 at L = 250, not 14.
/// 6: with exact values at K_a*, the first-order user count and training
/// fraction are closer than the second-order ones at every L in the grid.
const KNOWN_UNATTAINABLE: &[u32] = &[1, 6];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within_time(v: Verdict, elapsed: Duration, limit: Duration) -> Verdict {
    let ok = elapsed <= limit;
    verdict(
        v.pass && ok,
        format!(
            "{}; {:.1}s (limit {}s)",
            v.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        ),
    )
}

fn x_of(alpha: f64, eps: f64, s: f64) -> f64 {
    (1.0 + alpha / (s * eps)) * (1.0 + (1.0 - alpha) / (s * (1.0 - eps))) - 1.0
}

fn dx_deps(alpha: f64, eps: f64, s: f64) -> f64 {
    let a = alpha / s;
    let b = (1.0 - alpha) / s;
    -a / (eps * eps) * (1.0 + b / (1.0 - eps)) + (1.0 + a / eps) * b / ((1.0 - eps) * (1.0 - eps))
}

fn grid_bisect_argmin(alpha: f64, s: f64, n: usize) -> f64 {
    let h = 1.0 / (n as f64 + 1.0);
    let mut best = (1, f64::INFINITY);
    for i in 1..=n {
        let v = x_of(alpha, i as f64 * h, s);
        if v < best.1 {
            best = (i, v);
        }
    }
    let mut lo = ((best.0 - 1) as f64 * h).max(1e-300);
    let mut hi = ((best.0 + 1) as f64 * h).min(1.0 - 1e-16);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dx_deps(alpha, mid, s) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c1_reference_optimum() -> Verdict {
    let start = Instant::now();
    let config = SystemConfig::reference(250).unwrap();
    let report = optimizer::optimal_user_count(&config).unwrap();
    let next = optimizer::optimal_rate_for(&config, 14).unwrap().value;
    let v = verdict(
        report.k_star == 14,
        format!(
            "K* = {} (want 14); C(13) = {:.10}, C(14) = {:.10}",
            report.k_star, report.rate.value, next
        ),
    );
    within_time(v, start.elapsed(), Duration::from_secs(10))
}

fn c2_power_fraction() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pairs: Vec<(f64, f64)> = (0..500)
        .map(|_| {
            let alpha = 10f64.powf(rng.random_range(-4.0..(0.95f64).log10()));
            let s = 10f64.powf(rng.random_range(-1.0..3.0));
            (alpha, s)
        })
        .collect();
    let (worst_err, worst_resid) = pairs
        .par_iter()
        .map(|&(alpha, s)| {
            let got = optimal_eps_bar(alpha, s).unwrap();
            let want = grid_bisect_argmin(alpha, s, 1_000_000);
            ((got - want).abs(), quadratic_residual(alpha, s, got).abs())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let v = verdict(
        worst_err <= 1e-6 && worst_resid < 1e-9,
        format!(
            "500 pairs: max |closed - grid| = {worst_err:.2e}, max residual = {worst_resid:.2e}"
        ),
    );
    within_time(v, start.elapsed(), Duration::from_secs(60))
}

fn c3_rate_cross_validation() -> Verdict {
    let start = Instant::now();
    let xs: Vec<f64> = (0..=50)
        .map(|i| 10f64.powf(-3.0 + 5.0 * i as f64 / 50.0))
        .collect();
    let mut worst = 0.0f64;
    for k in 1..=30 {
        for &x in &xs {
            let q = expected_log_max(k, x).unwrap().value;
            let s = expected_log_max_series(k, x).unwrap();
            worst = worst.max((q - s).abs());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bracketed = 0;
    for i in 0..20 {
        let l = rng.random_range(50..=2_000usize);
        let k = rng.random_range(1..=30usize.min(l / 2));
        let db = rng.random_range(0.0..20.0);
        let config = SystemConfig::new(1.0, 1.0, 10f64.powf(-db / 10.0), l).unwrap();
        let eps = rng.random_range(0.05..0.6);
        let policy = TrainingPolicy::from_power_fraction(&config, k, 1, eps).unwrap();
        let analytic = achievable_rate(&policy, &config).unwrap().value;
        let out = simulate_blocks(&policy, &config, 1_000_000, 300 + i).unwrap();
        if out.brackets(analytic) {
            bracketed += 1;
        }
    }
    let v = verdict(
        worst <= 1e-8 && bracketed >= 19,
        format!("max |quadrature - series| = {worst:.2e} over K <= 30; Monte Carlo brackets {bracketed}/20"),
    );
    within_time(v, start.elapsed(), Duration::from_secs(300))
}

fn c4_jensen_and_harmonic() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    let mut min_margin = f64::INFINITY;
    for _ in 0..10_000 {
        let l = rng.random_range(10..=5_000usize);
        let k = rng.random_range(1..=(l / 2).min(500));
        let db = rng.random_range(-5.0..30.0);
        let config = SystemConfig::new(1.0, 1.0, 10f64.powf(-db / 10.0), l).unwrap();
        let eps = rng.random_range(0.01..0.99);
        let policy = TrainingPolicy::from_power_fraction(&config, k, 1, eps).unwrap();
        let c = achievable_rate(&policy, &config).unwrap().value;
        let j = jensen_upper_bound(&policy, &config).unwrap();
        min_margin = min_margin.min(j - c);
        if j <= c + 1e-12 || j.is_nan() {
            violations += 1;
        }
    }
    let mut harmonic_ok = true;
    let mut parts = Vec::new();
    for (k, n) in [(1usize, 1_000_000u64), (3, 1_000_000), (30, 10_000_000)] {
        let est = empirical_max_estimate_mean(k, n, 40 + k as u64).unwrap();
        let z = (est.mean - harmonic(k)) / est.std_err.unwrap();
        harmonic_ok &= z.abs() <= 3.0;
        parts.push(format!("K={k}: z={z:+.2}"));
    }
    verdict(
        violations == 0 && harmonic_ok,
        format!(
            "Jensen violations {violations}/10000 (min margin {min_margin:.2e}); {}",
            parts.join(", ")
        ),
    )
}

fn gaps(l: usize) -> (f64, f64) {
    let config = SystemConfig::reference(l).unwrap();
    let s = config.snr();
    let c = optimizer::optimal_user_count_pruned(&config)
        .unwrap()
        .rate
        .value;
    let k1 = optimizer::approx_a1_user_count(&config).unwrap();
    let x1 = optimizer::optimal_inverse_snr(k1, l, s).unwrap();
    let a1 = rate::approx_rate_a1(k1 as f64, l as f64, x1).unwrap();
    let k2 = optimizer::approx_user_count(&config).unwrap();
    let a2 = rate::approx_rate_a2(k2 as f64, l as f64, s).unwrap();
    ((c - a1).abs() / c, (c - a2).abs() / c)
}

fn c5_gap_trend() -> Verdict {
    let g: Vec<(f64, f64)> = [1_000, 10_000, 100_000].into_iter().map(gaps).collect();
    let dec = g.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1);
    let text: Vec<String> = g.iter().map(|(a, b)| format!("({a:.4}, {b:.4})")).collect();
    verdict(
        dec,
        format!("(gap_a1, gap_a2) at L = 1e3, 1e4, 1e5: {}", text.join(" ")),
    )
}

fn dominance(e: &LargeBlockExpansions) -> [bool; 3] {
    [&e.alpha, &e.pilot_power, &e.users].map(|r| r.second_order_closer().unwrap())
}

fn c6_second_order_dominance() -> Verdict {
    let start = Instant::now();
    let mut fails = Vec::new();
    let mut optimum_fails = Vec::new();
    for l in [1_000usize, 10_000, 100_000, 1_000_000] {
        let config = SystemConfig::reference(l).unwrap();
        let names = ["alpha", "P_T", "K"];
        for (name, b) in names
            .iter()
            .zip(dominance(&expansions_at_approx_optimum(&config).unwrap()))
        {
            if !b {
                fails.push(format!("{name}@{l}"));
            }
        }
        let k = optimizer::optimal_user_count_pruned(&config)
            .unwrap()
            .k_star;
        for (name, b) in names.iter().zip(dominance(
            &large_block_expansions(&config, Some(k)).unwrap(),
        )) {
            if !b {
                optimum_fails.push(format!("{name}@{l}"));
            }
        }
    }
    let list = |v: &[String]| {
        if v.is_empty() {
            "none".to_string()
        } else {
            v.join(" ")
        }
    };
    let v = verdict(
        fails.is_empty(),
        format!(
            "exact values at K_a*, L = 1e3..1e6: not closer {}; at the exhaustive K* instead: not closer {}",
            list(&fails),
            list(&optimum_fails)
        ),
    );
    within_time(v, start.elapsed(), Duration::from_secs(600))
}

fn c7_rate_growth() -> Verdict {
    let mut prev: Option<(f64, f64, f64)> = None;
    let mut ok = true;
    let mut parts = Vec::new();
    for l in [1_000usize, 10_000, 100_000, 1_000_000, 10_000_000] {
        let config = SystemConfig::reference(l).unwrap();
        let r = optimizer::optimal_user_count_pruned(&config).unwrap();
        let c = r.rate.value;
        let alpha = r.policy.alpha();
        let gap = (c - asymptotic_rate(l as f64, config.snr()).unwrap()).abs();
        if let Some((pc, pa, pg)) = prev {
            ok &= c > pc && alpha < pa && gap < pg;
        }
        prev = Some((c, alpha, gap));
        parts.push(format!(
            "{:.0e}: C={c:.4} a={alpha:.3e} gap={gap:.4}",
            l as f64
        ));
    }
    verdict(ok, parts.join("; "))
}

fn c8_scheduling() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = 0;
    for _ in 0..10_000 {
        let k = rng.random_range(1..=30usize);
        let sigma_hhat2 = rng.random_range(0.05..1.0);
        let sigma_e2 = 1.0 - sigma_hhat2;
        let sigma_z2 = 10f64.powf(rng.random_range(-3.0..1.0));
        let power = 10f64.powf(rng.random_range(-1.0..2.0));
        let gains = draw_estimate_gains(k, sigma_hhat2, &mut rng);
        if !single_user_scheduling_dominates(&gains, power, sigma_e2, sigma_z2, 100, &mut rng) {
            failures += 1;
        }
    }
    verdict(
        failures == 0,
        format!("{failures} of 10000 realizations beaten by a random split"),
    )
}

fn cli_output(args: &[&str], threads: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_mac-training"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn c9_determinism() -> Verdict {
    let runs: [&[&str]; 4] = [
        &["optimize"],
        &["approx-gap", "--l-grid", "250,1e3,1e4,1e5"],
        &["scaling", "--l-grid", "1e3,1e4"],
        &["simulate", "--n-blocks", "200000", "--seed", "9"],
    ];
    let mut mismatched = Vec::new();
    for args in runs {
        let a = cli_output(args, "4");
        let b = cli_output(args, "4");
        let c = cli_output(args, "1");
        if a != b || a != c {
            mismatched.push(args[0]);
        }
    }
    verdict(
        mismatched.is_empty(),
        format!("4 subcommands, repeated and with 1 vs 4 threads; mismatched: {mismatched:?}"),
    )
}

fn main() {
    let criteria: [(u32, fn() -> Verdict); 9] = [
        (1, c1_reference_optimum),
        (2, c2_power_fraction),
        (3, c3_rate_cross_validation),
        (4, c4_jensen_and_harmonic),
        (5, c5_gap_trend),
        (6, c6_second_order_dominance),
        (7, c7_rate_growth),
        (8, c8_scheduling),
        (9, c9_determinism),
    ];
    let mut unexpected = Vec::new();
    for (id, check) in criteria {
        let v = check();
        let known = KNOWN_UNATTAINABLE.contains(&id);
        let tag = if v.pass { "PASS" } else { "FAIL" };
        let note = if known && !v.pass {
            " [known unattainable]"
        } else {
            ""
        };
        println!("{tag} criterion {id}: {}{note}", v.detail);
        if v.pass == known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
