//! Optimal user count, pilot power and rate at L = 250 and L = 10^4.
//!
//! Run with `cargo run --release --example optimal_users`.

use mac_training::optimizer;
use mac_training::{Result, SystemConfig};

/// Returns `K*` at `L = 250` for the reference system (S = 10).
pub fn run_example() -> Result<usize> {
    let config = SystemConfig::reference(250)?;
    let report = optimizer::optimal_user_count(&config)?;
    let p = &report.policy;
    println!("L = 250, S = {}", config.snr());
    println!(
        "K* = {}  alpha = {:.4}  eps_bar = {:.6}  P_T = {:.6}  P_D = {:.6}",
        report.k_star,
        p.alpha(),
        p.eps_bar(),
        p.pilot_power(),
        p.data_power()
    );
    println!(
        "sigma_e^2 = {:.6}  x = {:.6}  rate = {:.10} nats/use",
        report.stats.sigma_e2, report.stats.x, report.rate.value
    );
    for pt in report
        .sweep
        .iter()
        .filter(|pt| pt.users.abs_diff(report.k_star) <= 2)
    {
        println!("  K = {:>3}  rate = {:.10}", pt.users, pt.rate);
    }

    // Large blocks: the pruned search skips user counts whose Jensen bound
    // cannot reach the incumbent.
    let large = SystemConfig::reference(10_000)?;
    let pruned = optimizer::optimal_user_count_pruned(&large)?;
    println!(
        "L = 10000: K* = {} rate = {:.10} ({} of {} user counts evaluated)",
        pruned.k_star,
        pruned.rate.value,
        pruned.sweep.len(),
        large.block_length() - 1
    );
    Ok(report.k_star)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
