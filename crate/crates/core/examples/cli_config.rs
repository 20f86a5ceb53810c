//! Driving the command-line front end from code: a JSON run configuration
//! layered under explicit settings, rendered as CSV.
//!
//! Run with `cargo run --release --example cli_config`.

use mac_training::cli::{self, CommandKind, RunConfig};
use mac_training::Result;

/// Returns the rendered `sweep-k` table.
pub fn run_example() -> Result<String> {
    let file = RunConfig::from_json(r#"{"block-length": 40, "snr-db": 10, "format": "csv"}"#)?;
    let flags = RunConfig {
        k_max: Some(8),
        ..Default::default()
    };
    let cfg = file.overlay(flags);
    println!("resolved config:\n{}", cfg.to_json());
    let table = cli::run(CommandKind::SweepK, &cfg)?;
    print!("{table}");
    Ok(table)
}

fn main() -> Result<()> {
    run_example().map(|_| ())
}
