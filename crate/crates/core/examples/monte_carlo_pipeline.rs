//! Seeded simulation of pilots, MMSE estimation and strongest-user
//! scheduling, compared with the analytic rate.
//!
//! Run with `cargo run --release --example monte_carlo_pipeline`.

use mac_training::numerics::harmonic;
use mac_training::sim::{self, DEFAULT_SEED};
use mac_training::{optimizer, rate, EstimationStats, Result, SystemConfig};

/// Returns whether the 99% interval of the simulated rate contains the
/// analytic value.
pub fn run_example() -> Result<bool> {
    let config = SystemConfig::reference(250)?;
    let policy = optimizer::optimal_policy(&config, 13)?;
    let stats = EstimationStats::new(&policy, &config)?;
    let analytic = rate::achievable_rate(&policy, &config)?.value;

    let outcome = sim::simulate_blocks(&policy, &config, 200_000, DEFAULT_SEED)?;
    let half = outcome.ci_halfwidth_99.unwrap_or(f64::NAN);
    println!("analytic rate  {analytic:.6}");
    println!(
        "simulated rate {:.6} +/- {half:.6} (99%, {} blocks)",
        outcome.mean_rate, outcome.n_blocks
    );
    println!(
        "sigma_e^2      {:.6} vs {:.6}",
        outcome.empirical_sigma_e2, stats.sigma_e2
    );
    println!(
        "E max |h_hat|^2 {:.6} vs {:.6}",
        outcome.empirical_max_hhat2_mean,
        stats.sigma_hhat2 * harmonic(policy.users())
    );
    let d = &outcome.diagnostics;
    println!(
        "cross term {:.2e} (s.e. {:.1e}), variance split {:.6}",
        d.cross_term.mean,
        d.cross_term.std_err.unwrap_or(f64::NAN),
        d.variance_split.mean
    );

    // Same seed, same numbers, whatever the thread count.
    let again = sim::simulate_blocks(&policy, &config, 200_000, DEFAULT_SEED)?;
    assert_eq!(again.mean_rate.to_bits(), outcome.mean_rate.to_bits());
    Ok(outcome.brackets(analytic))
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
