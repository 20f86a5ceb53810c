//! The pilot power trade-off at a fixed user count: a coarse scan of the
//! power fraction against the closed-form optimum, and one long pilot
//! against one short pilot carrying the same energy.
//!
//! Run with `cargo run --release --example training_tradeoff`.

use mac_training::model::inverse_snr;
use mac_training::{optimizer, rate, Result, SystemConfig, TrainingPolicy};

/// Returns `(closed-form eps_bar, best scanned eps_bar)`.
pub fn run_example() -> Result<(f64, f64)> {
    let config = SystemConfig::reference(250)?;
    let users = 13;
    let alpha = users as f64 / config.block_length() as f64;
    let snr = config.snr();

    let eps_star = optimizer::optimal_eps_bar(alpha, snr)?;
    println!("alpha = {alpha}, closed-form eps_bar* = {eps_star:.8}");

    let mut best = (f64::NAN, f64::INFINITY);
    for i in 1..100 {
        let eps = i as f64 / 100.0;
        let x = inverse_snr(alpha, eps, snr)?;
        if x < best.1 {
            best = (eps, x);
        }
        if i % 10 == 0 {
            let policy = TrainingPolicy::from_power_fraction(&config, users, 1, eps)?;
            let r = rate::achievable_rate(&policy, &config)?.value;
            println!("  eps_bar {eps:.2}  x {x:.6}  rate {r:.6}");
        }
    }
    println!(
        "scan minimum at eps_bar = {:.2} (x = {:.6})",
        best.0, best.1
    );

    // Two pilot symbols at half the power versus one symbol: same estimate
    // quality, twice the time overhead.
    let short = optimizer::optimal_policy(&config, users)?;
    let long = TrainingPolicy::new(&config, users, 2, short.pilot_power() / 2.0)?;
    let r_short = rate::achievable_rate(&short, &config)?.value;
    let r_long = rate::achievable_rate(&long, &config)?.value;
    println!("one pilot: {r_short:.6}  two pilots at half power: {r_long:.6}");
    Ok((eps_star, best.0))
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
