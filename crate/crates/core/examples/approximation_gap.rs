//! How far the two closed-form rate approximations sit from the optimized
//! rate, each taken at its own maximizing user count.
//!
//! Run with `cargo run --release --example approximation_gap`.

use mac_training::{optimizer, rate, Result, SystemConfig};

/// Returns `(L, gap_a1, gap_a2)` for each block length.
pub fn run_example() -> Result<Vec<(usize, f64, f64)>> {
    let mut rows = Vec::new();
    println!(
        "{:>8} {:>6} {:>12} {:>6} {:>10} {:>6} {:>10}",
        "L", "K*", "rate", "K_a1", "gap_a1", "K_a2", "gap_a2"
    );
    for l in [1_000usize, 10_000, 100_000] {
        let config = SystemConfig::reference(l)?;
        let snr = config.snr();
        let best = optimizer::optimal_user_count_pruned(&config)?;
        let c = best.rate.value;

        let k1 = optimizer::approx_a1_user_count(&config)?;
        let a1 = rate::approx_rate_a1(
            k1 as f64,
            l as f64,
            optimizer::optimal_inverse_snr(k1, l, snr)?,
        )?;
        let k2 = optimizer::approx_user_count(&config)?;
        let a2 = rate::approx_rate_a2(k2 as f64, l as f64, snr)?;

        let (g1, g2) = ((c - a1).abs() / c, (c - a2).abs() / c);
        println!(
            "{l:>8} {:>6} {c:>12.8} {k1:>6} {g1:>10.6} {k2:>6} {g2:>10.6}",
            best.k_star
        );
        rows.push((l, g1, g2));
    }
    Ok(rows)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
