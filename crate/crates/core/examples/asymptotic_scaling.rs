//! Optimal parameters against their first- and second-order large-L
//! expansions, and the optimized rate against `ln ln L + ln S`.
//!
//! Run with `cargo run --release --example asymptotic_scaling`.

use mac_training::{asymptotics, optimizer, Result, SystemConfig};

/// Returns, for each block length, whether the second-order expression was
/// closer for every parameter.
pub fn run_example() -> Result<Vec<bool>> {
    let mut verdicts = Vec::new();
    for l in [1_000usize, 10_000, 100_000] {
        let config = SystemConfig::reference(l)?;
        let best = optimizer::optimal_user_count_pruned(&config)?;
        let expansions = asymptotics::large_block_expansions(&config, Some(best.k_star))?;
        println!("L = {l} (K* = {})", best.k_star);
        let mut all = true;
        for (name, e) in expansions.iter() {
            let closer = e.second_order_closer().unwrap_or(false);
            all &= closer;
            println!(
                "  {name:<15} exact {:>12.6}  first {:>12.6}  second {:>12.6}  second closer: {closer}",
                e.exact.unwrap_or(f64::NAN),
                e.first_order,
                e.second_order
            );
        }
        let limit = asymptotics::asymptotic_rate(l as f64, config.snr())?;
        println!(
            "  rate {:.6} vs ln ln L + ln S = {limit:.6}",
            best.rate.value
        );
        verdicts.push(all);
    }
    Ok(verdicts)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
