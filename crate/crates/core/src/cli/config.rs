use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::SystemConfig;
use crate::sim::DEFAULT_SEED;

pub const DEFAULT_POWER: f64 = 1.0;
pub const DEFAULT_SIGMA_H2: f64 = 1.0;
pub const DEFAULT_SIGMA_Z2: f64 = 0.1;
pub const DEFAULT_BLOCK_LENGTH: usize = 250;
pub const DEFAULT_L_GRID: [usize; 5] = [250, 1_000, 10_000, 100_000, 1_000_000];
pub const DEFAULT_N_BLOCKS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Run settings shared by every subcommand. Every field is optional so a
/// file and the command line can be layered; unset fields fall back to the
/// defaults above when resolved.
///
/// Keys in a JSON file are the flag names without the leading dashes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_h2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_z2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_grid: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_blocks: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub users: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| domain("config", e.to_string()))
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| domain("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Field-wise overlay: values set in `over` win.
    pub fn overlay(self, over: RunConfig) -> RunConfig {
        RunConfig {
            power: over.power.or(self.power),
            sigma_h2: over.sigma_h2.or(self.sigma_h2),
            sigma_z2: over.sigma_z2.or(self.sigma_z2),
            snr_db: over.snr_db.or(self.snr_db),
            block_length: over.block_length.or(self.block_length),
            l_grid: over.l_grid.or(self.l_grid),
            k_max: over.k_max.or(self.k_max),
            n_blocks: over.n_blocks.or(self.n_blocks),
            seed: over.seed.or(self.seed),
            users: over.users.or(self.users),
            eps_bar: over.eps_bar.or(self.eps_bar),
            output: over.output.or(self.output),
            format: over.format.or(self.format),
        }
    }

    /// Whether `--snr-db` was supplied but overridden by an explicit noise
    /// variance.
    pub fn snr_db_ignored(&self) -> bool {
        self.snr_db.is_some() && self.sigma_z2.is_some()
    }

    /// System parameters for block length `block_length`.
    ///
    /// An explicit `sigma-z2` always wins. Otherwise `snr-db`, if given,
    /// sets `sigma_z^2 = P sigma_h^2 / 10^(dB/10)`.
    pub fn system(&self, block_length: usize) -> Result<SystemConfig> {
        let power = self.power.unwrap_or(DEFAULT_POWER);
        let sigma_h2 = self.sigma_h2.unwrap_or(DEFAULT_SIGMA_H2);
        let sigma_z2 = match (self.sigma_z2, self.snr_db) {
            (Some(v), _) => v,
            (None, Some(db)) => {
                if !db.is_finite() {
                    return Err(domain("snr-db", format!("must be finite, got {db}")));
                }
                power * sigma_h2 / 10f64.powf(db / 10.0)
            }
            (None, None) => DEFAULT_SIGMA_Z2,
        };
        SystemConfig::new(power, sigma_h2, sigma_z2, block_length)
    }

    pub fn block_length(&self) -> usize {
        self.block_length.unwrap_or(DEFAULT_BLOCK_LENGTH)
    }

    pub fn l_grid(&self) -> Result<Vec<usize>> {
        let grid = self
            .l_grid
            .clone()
            .unwrap_or_else(|| DEFAULT_L_GRID.to_vec());
        if grid.is_empty() {
            return Err(domain("l-grid", "must list at least one block length"));
        }
        Ok(grid)
    }

    pub fn n_blocks(&self) -> u64 {
        self.n_blocks.unwrap_or(DEFAULT_N_BLOCKS)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }
}

/// Parses a non-negative integer, also accepting exact scientific notation
/// such as `1e6`.
pub fn parse_count(text: &str) -> std::result::Result<u64, String> {
    let text = text.trim();
    if let Ok(v) = text.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = text
        .parse()
        .map_err(|_| format!("not a number: {text:?}"))?;
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(format!("not a non-negative integer: {text:?}"))
    }
}

pub fn parse_usize(text: &str) -> std::result::Result<usize, String> {
    let v = parse_count(text)?;
    usize::try_from(v).map_err(|_| format!("too large: {text:?}"))
}
