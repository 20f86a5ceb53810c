//! Command-line front end.
//!
//! Every subcommand resolves a [`RunConfig`] (JSON file first, flags on top),
//! computes its table and writes it to `--output` or standard output. Exit
//! status is 0 on success, 1 when the configuration is invalid or an
//! internal consistency check fails, and 2 on a usage error.

mod commands;
pub mod config;
pub mod format;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use commands::{approx_gap, optimize, run, scaling, simulate, sweep_k};
pub use config::{OutputFormat, RunConfig};

use crate::error::{domain, Result};

#[derive(Debug, Parser)]
#[command(
    name = "mac-training",
    version,
    about = "Pilot and user-count optimization for strongest-user scheduling with estimated channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Subcommand selector for [`run`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    /// Exhaustive user-count search at one block length.
    Optimize,
    /// Optimized rate for every user count at one block length.
    SweepK,
    /// Relative gap between the rate and both approximations over an L grid.
    ApproxGap,
    /// Optimal parameters against their large-L expansions over an L grid.
    Scaling,
    /// Monte Carlo simulation of one policy.
    Simulate,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exhaustive user-count search at one block length.
    Optimize(Flags),
    /// Optimized rate for every user count at one block length.
    SweepK(Flags),
    /// Relative gap between the rate and both approximations over an L grid.
    ApproxGap(Flags),
    /// Optimal parameters against their large-L expansions over an L grid.
    Scaling(Flags),
    /// Monte Carlo simulation of one policy (optimal by default).
    Simulate(Flags),
}

#[derive(Debug, Clone, Args)]
struct Flags {
    /// JSON file with any of the flags below as keys; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Average transmit power P [default: 1].
    #[arg(long, allow_hyphen_values = true)]
    power: Option<f64>,
    /// Channel variance [default: 1].
    #[arg(long = "sigma-h2", allow_hyphen_values = true)]
    sigma_h2: Option<f64>,
    /// Noise variance [default: 0.1]; wins over --snr-db.
    #[arg(long = "sigma-z2", allow_hyphen_values = true)]
    sigma_z2: Option<f64>,
    /// SNR in dB; sets the noise variance unless --sigma-z2 is given.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Block length L [default: 250].
    #[arg(long = "block-length", value_parser = config::parse_usize)]
    block_length: Option<usize>,
    /// Comma-separated block lengths [default: 250,1e3,1e4,1e5,1e6].
    #[arg(long = "l-grid", value_delimiter = ',', value_parser = config::parse_usize)]
    l_grid: Option<Vec<usize>>,
    /// Largest user count searched [default: L - 1].
    #[arg(long = "k-max", value_parser = config::parse_usize)]
    k_max: Option<usize>,
    /// Simulated blocks [default: 1e6].
    #[arg(long = "n-blocks", value_parser = config::parse_count)]
    n_blocks: Option<u64>,
    /// Random seed [default: 20110915].
    #[arg(long, value_parser = config::parse_count)]
    seed: Option<u64>,
    /// Simulated user count [default: the optimal K].
    #[arg(long, value_parser = config::parse_usize)]
    users: Option<usize>,
    /// Simulated pilot power fraction [default: the optimal one].
    #[arg(long = "eps-bar", allow_hyphen_values = true)]
    eps_bar: Option<f64>,
    /// Output file [default: standard output].
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Output format [default: json for optimize and simulate, csv otherwise].
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

impl Flags {
    fn resolve(self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(RunConfig {
            power: self.power,
            sigma_h2: self.sigma_h2,
            sigma_z2: self.sigma_z2,
            snr_db: self.snr_db,
            block_length: self.block_length,
            l_grid: self.l_grid,
            k_max: self.k_max,
            n_blocks: self.n_blocks,
            seed: self.seed,
            users: self.users,
            eps_bar: self.eps_bar,
            output: self.output,
            format: self.format,
        }))
    }
}

/// Parses `args` (program name first), runs the subcommand and maps the
/// outcome to an exit code.
pub fn main_with_args<I: IntoIterator<Item = OsString>>(args: I) -> ExitCode {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(2));
        }
    };
    let (kind, flags) = match cli.command {
        Command::Optimize(f) => (CommandKind::Optimize, f),
        Command::SweepK(f) => (CommandKind::SweepK, f),
        Command::ApproxGap(f) => (CommandKind::ApproxGap, f),
        Command::Scaling(f) => (CommandKind::Scaling, f),
        Command::Simulate(f) => (CommandKind::Simulate, f),
    };
    match flags.resolve().and_then(|cfg| execute(kind, &cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(kind: CommandKind, cfg: &RunConfig) -> Result<()> {
    if cfg.snr_db_ignored() {
        eprintln!("note: --snr-db ignored because --sigma-z2 is set");
    }
    let text = run(kind, cfg)?;
    match &cfg.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| domain("output", format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| domain("output", e.to_string())),
    }
}
