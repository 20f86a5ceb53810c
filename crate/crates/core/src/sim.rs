//! Seeded Monte Carlo simulation of the training and scheduling pipeline.
//!
//! Random streams: blocks are grouped into consecutive chunks of
//! [`BLOCKS_PER_STREAM`]. Chunk `i` draws from ChaCha8 keyed by the 64-bit
//! seed (via `seed_from_u64`) on stream `i`. Chunks may run on any thread;
//! their moment accumulators are merged in chunk order, so an outcome depends
//! only on `(policy, config, n_blocks, seed)`.
//!
//! A complex Gaussian `CN(0, s)` is drawn as two independent real Gaussians
//! of variance `s / 2`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::{mmse_error_variance, SystemConfig, TrainingPolicy};

pub const BLOCKS_PER_STREAM: u64 = 4096;

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_110_915;

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.576;

/// Random stream for chunk `stream` under `seed`.
pub fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Running mean and sum of squared deviations; merged pairwise with Chan's
/// update so chunked and sequential accumulation agree.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64 / n as f64);
        self.n = n;
    }

    fn variance(&self) -> Option<f64> {
        (self.n > 1).then(|| self.m2 / (self.n - 1) as f64)
    }

    fn estimate(&self) -> MomentEstimate {
        MomentEstimate {
            mean: self.mean,
            std_err: self.variance().map(|v| (v / self.n as f64).sqrt()),
            n: self.n,
        }
    }
}

/// Sample mean with its standard error (absent for a single sample).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_err: Option<f64>,
    pub n: u64,
}

impl MomentEstimate {
    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn within(&self, value: f64, k: f64) -> bool {
        match self.std_err {
            Some(se) => (self.mean - value).abs() <= k * se,
            None => false,
        }
    }
}

/// Per-user estimator statistics gathered alongside the rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorDiagnostics {
    /// `|h - h_hat|^2` over all users and blocks.
    pub error_power: MomentEstimate,
    /// `|h_hat|^2` over all users and blocks.
    pub estimate_power: MomentEstimate,
    /// `Re(h_hat conj(h - h_hat))`; zero in expectation for an MMSE estimate.
    pub cross_term: MomentEstimate,
    /// `|h_hat|^2 + |h - h_hat|^2`; its mean is `sigma_h^2`.
    pub variance_split: MomentEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimOutcome {
    /// Mean per-block rate in nats per channel use.
    pub mean_rate: f64,
    /// `2.576 s / sqrt(n)`; absent when `n_blocks == 1`.
    pub ci_halfwidth_99: Option<f64>,
    pub n_blocks: u64,
    pub empirical_sigma_e2: f64,
    pub empirical_max_hhat2_mean: f64,
    pub seed: u64,
    pub rate_std: Option<f64>,
    pub diagnostics: EstimatorDiagnostics,
}

impl SimOutcome {
    /// Whether `value` lies inside the 99% confidence interval.
    pub fn brackets(&self, value: f64) -> bool {
        self.ci_halfwidth_99
            .is_some_and(|h| (self.mean_rate - value).abs() <= h)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ChunkAccumulator {
    rate: Moments,
    max_hhat2: Moments,
    error_power: Moments,
    estimate_power: Moments,
    cross: Moments,
    split: Moments,
}

impl ChunkAccumulator {
    fn merge(&mut self, o: &ChunkAccumulator) {
        self.rate.merge(&o.rate);
        self.max_hhat2.merge(&o.max_hhat2);
        self.error_power.merge(&o.error_power);
        self.estimate_power.merge(&o.estimate_power);
        self.cross.merge(&o.cross);
        self.split.merge(&o.split);
    }
}

fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> (f64, f64) {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    (s * re, s * im)
}

fn chunk_ranges(n_blocks: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> {
    let n_chunks =
        usize::try_from(n_blocks.div_ceil(BLOCKS_PER_STREAM)).expect("chunk count fits usize");
    (0..n_chunks).into_par_iter().map(move |c| {
        let c = c as u64;
        let start = c * BLOCKS_PER_STREAM;
        (c, (n_blocks - start).min(BLOCKS_PER_STREAM))
    })
}

fn check_consistent(policy: &TrainingPolicy, config: &SystemConfig) -> Result<()> {
    let l = config.block_length();
    let pilots = policy.users() * policy.pilots_per_user();
    if pilots >= l {
        return Err(domain(
            "policy",
            format!("{pilots} pilot symbols do not fit a block of {l}"),
        ));
    }
    let alpha = pilots as f64 / l as f64;
    if (alpha - policy.alpha()).abs() > 1e-12 {
        return Err(domain("policy", "built for a different block length"));
    }
    let spent =
        policy.alpha() * policy.pilot_power() + (1.0 - policy.alpha()) * policy.data_power();
    if ((spent - config.power()) / config.power()).abs() > 1e-9 {
        return Err(domain("policy", "built for a different power budget"));
    }
    if !(policy.data_power() > 0.0) {
        return Err(Error::Infeasible {
            training: policy.alpha() * policy.pilot_power(),
            budget: config.power(),
        });
    }
    Ok(())
}

/// Simulates `n_blocks` coherence blocks: channel draws, pilot
/// observations, MMSE estimates, strongest-estimate scheduling and the
/// per-block rate `(1 - alpha) ln(1 + P_D |h_hat*|^2 / (P_D sigma_e^2 + sigma_z^2))`.
pub fn simulate_blocks(
    policy: &TrainingPolicy,
    config: &SystemConfig,
    n_blocks: u64,
    seed: u64,
) -> Result<SimOutcome> {
    if n_blocks == 0 {
        return Err(domain("n_blocks", "must be at least 1"));
    }
    check_consistent(policy, config)?;

    let k = policy.users();
    let sigma_h2 = config.sigma_h2();
    let sigma_z2 = config.sigma_z2();
    let energy = policy.pilots_per_user() as f64 * policy.pilot_power();
    let amplitude = energy.sqrt();
    let coeff = sigma_h2 * amplitude / (sigma_h2 * energy + sigma_z2);
    let sigma_e2 = mmse_error_variance(
        sigma_h2,
        policy.pilots_per_user(),
        policy.pilot_power(),
        sigma_z2,
    )?;
    let pd = policy.data_power();
    let noise = pd * sigma_e2 + sigma_z2;
    let prefactor = 1.0 - policy.alpha();

    let chunks: Vec<ChunkAccumulator> = chunk_ranges(n_blocks)
        .map(|(stream, blocks)| {
            let mut rng = chunk_rng(seed, stream);
            let mut acc = ChunkAccumulator::default();
            for _ in 0..blocks {
                let mut best = 0.0f64;
                for _ in 0..k {
                    let (hr, hi) = complex_gaussian(&mut rng, sigma_h2);
                    let (zr, zi) = complex_gaussian(&mut rng, sigma_z2);
                    let er_ = coeff * (amplitude * hr + zr);
                    let ei_ = coeff * (amplitude * hi + zi);
                    let (dr, di) = (hr - er_, hi - ei_);
                    let est = er_ * er_ + ei_ * ei_;
                    let err = dr * dr + di * di;
                    acc.error_power.push(err);
                    acc.estimate_power.push(est);
                    acc.cross.push(er_ * dr + ei_ * di);
                    acc.split.push(est + err);
                    best = best.max(est);
                }
                acc.max_hhat2.push(best);
                acc.rate.push(prefactor * (pd * best / noise).ln_1p());
            }
            acc
        })
        .collect();

    let mut total = ChunkAccumulator::default();
    for c in &chunks {
        total.merge(c);
    }
    let rate_std = total.rate.variance().map(f64::sqrt);
    Ok(SimOutcome {
        mean_rate: total.rate.mean,
        ci_halfwidth_99: rate_std.map(|s| Z_99 * s / (n_blocks as f64).sqrt()),
        n_blocks,
        empirical_sigma_e2: total.error_power.mean,
        empirical_max_hhat2_mean: total.max_hhat2.mean,
        seed,
        rate_std,
        diagnostics: EstimatorDiagnostics {
            error_power: total.error_power.estimate(),
            estimate_power: total.estimate_power.estimate(),
            cross_term: total.cross.estimate(),
            variance_split: total.split.estimate(),
        },
    })
}

/// Monte Carlo mean of the maximum of `k` unit exponentials.
pub fn empirical_max_estimate_mean(k: usize, n_blocks: u64, seed: u64) -> Result<MomentEstimate> {
    if k == 0 {
        return Err(domain("users", "must be at least 1"));
    }
    if n_blocks == 0 {
        return Err(domain("n_blocks", "must be at least 1"));
    }
    let chunks: Vec<Moments> = chunk_ranges(n_blocks)
        .map(|(stream, blocks)| {
            let mut rng = chunk_rng(seed, stream);
            let mut m = Moments::default();
            for _ in 0..blocks {
                let mut best = 0.0f64;
                for _ in 0..k {
                    let v: f64 = rng.sample(Exp1);
                    best = best.max(v);
                }
                m.push(best);
            }
            m
        })
        .collect();
    let mut total = Moments::default();
    for c in &chunks {
        total.merge(c);
    }
    Ok(total.estimate())
}

/// Draws `|h_hat_k|^2` for `k` users with estimate variance `sigma_hhat2`.
pub fn draw_estimate_gains<R: Rng>(k: usize, sigma_hhat2: f64, rng: &mut R) -> Vec<f64> {
    (0..k)
        .map(|_| {
            let (re, im) = complex_gaussian(rng, sigma_hhat2);
            re * re + im * im
        })
        .collect()
}

/// Log term of the general multi-user scheduled rate:
/// `ln(1 + sum P_k g_k / (sigma_e^2 sum P_k + sigma_z^2))`.
pub fn scheduled_log_term(gains: &[f64], powers: &[f64], sigma_e2: f64, sigma_z2: f64) -> f64 {
    let signal: f64 = gains.iter().zip(powers).map(|(g, p)| g * p).sum();
    let total: f64 = powers.iter().sum();
    (signal / (sigma_e2 * total + sigma_z2)).ln_1p()
}

/// Checks that giving all of `total_power` to the strongest estimate beats
/// `trials` random splits of the same power over random user subsets.
///
/// Always expected to hold. Comparisons allow a relative slack of 1e-12 for
/// the rounding in normalizing the random split.
pub fn single_user_scheduling_dominates<R: Rng>(
    gains: &[f64],
    total_power: f64,
    sigma_e2: f64,
    sigma_z2: f64,
    trials: usize,
    rng: &mut R,
) -> bool {
    assert!(total_power > 0.0, "total power must be positive");
    let k = gains.len();
    if k <= 1 {
        return true;
    }
    let best = gains
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty");
    let mut concentrated = vec![0.0; k];
    concentrated[best] = total_power;
    let single = scheduled_log_term(gains, &concentrated, sigma_e2, sigma_z2);

    let mut powers = vec![0.0; k];
    for _ in 0..trials {
        loop {
            for p in powers.iter_mut() {
                *p = if rng.random_bool(0.5) {
                    rng.random::<f64>()
                } else {
                    0.0
                };
            }
            let sum: f64 = powers.iter().sum();
            if sum > 0.0 {
                powers.iter_mut().for_each(|p| *p *= total_power / sum);
                break;
            }
        }
        let split = scheduled_log_term(gains, &powers, sigma_e2, sigma_z2);
        if split > single + 1e-12 * single.abs().max(1e-300) {
            return false;
        }
    }
    true
}
