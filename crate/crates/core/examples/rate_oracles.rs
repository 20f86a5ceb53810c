//! Three routes to `E[ln(1 + max_k Y_k / x)]` for unit exponentials `Y_k`:
//! adaptive quadrature, the alternating exponential-integral series, and the
//! Jensen upper bound `ln(1 + H_K / x)`.
//!
//! Run with `cargo run --release --example rate_oracles`.

use mac_training::numerics::harmonic;
use mac_training::{rate, Result};

/// Returns the largest quadrature/series disagreement over the printed grid.
pub fn run_example() -> Result<f64> {
    let mut worst = 0.0f64;
    println!(
        "{:>3} {:>8} {:>20} {:>20} {:>10} {:>14}",
        "K", "x", "quadrature", "series", "|diff|", "jensen"
    );
    for k in [1usize, 2, 5, 14, 30] {
        for x in [1e-3, 0.1, 1.0, 10.0, 100.0] {
            let q = rate::expected_log_max(k, x)?;
            let s = rate::expected_log_max_series(k, x)?;
            let jensen = (harmonic(k) / x).ln_1p();
            let diff = (q.value - s).abs();
            worst = worst.max(diff);
            println!(
                "{k:>3} {x:>8} {:>20.15} {s:>20.15} {diff:>10.2e} {jensen:>14.10}",
                q.value
            );
        }
    }
    println!("largest disagreement: {worst:.2e}");

    // Beyond K = 30 only the quadrature is available.
    for k in [1_000usize, 100_000] {
        let q = rate::expected_log_max(k, 0.1)?;
        println!(
            "K = {k}: {:.12} ({} panels, est. error {:.1e})",
            q.value, q.intervals, q.abs_err
        );
    }
    Ok(worst)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
