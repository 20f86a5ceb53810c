//! Optimal training policies.
//!
//! With one pilot symbol per user the time fraction is `K / L`, the power
//! fraction minimizing the effective inverse SNR has a closed form, and the
//! user count is found by evaluating every `K` in `1..L`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, require_positive, require_unit_open, Result};
use crate::model::{inverse_snr, EstimationStats, SystemConfig, TrainingPolicy};
use crate::rate::{self, RateResult};

/// One point of a user-count sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub users: usize,
    pub rate: f64,
}

/// Outcome of the exhaustive user-count search.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport {
    pub k_star: usize,
    pub policy: TrainingPolicy,
    pub stats: EstimationStats,
    pub rate: RateResult,
    /// Scaled residual of the power-fraction quadratic at the chosen root.
    pub quadratic_residual: f64,
    pub sweep: Vec<SweepPoint>,
    /// User counts whose policy could not be formed; recorded with rate 0.
    pub infeasible: Vec<usize>,
}

/// Optimal time fraction `K / L`, reached with one pilot symbol per user.
pub fn optimal_alpha(k: usize, l: usize) -> Result<f64> {
    if k == 0 || k >= l {
        return Err(domain(
            "users",
            format!("need 1 <= K <= L - 1, got K = {k}, L = {l}"),
        ));
    }
    Ok(k as f64 / l as f64)
}

/// Power fraction minimizing the effective inverse SNR at time fraction
/// `alpha`.
///
/// This is the positive root of the stationarity quadratic, rationalized to
/// `sqrt(a (S + 1 - a)) / (sqrt(a (S + 1 - a)) + sqrt((1 - a)(S + a)))`.
/// The form needs no special case at `alpha = 1/2` (it gives exactly 1/2)
/// and does not lose digits when `alpha` is near 1/2.
pub fn optimal_eps_bar(alpha: f64, snr: f64) -> Result<f64> {
    require_unit_open("alpha", alpha)?;
    require_positive("snr", snr)?;
    let p = (alpha * (snr + (1.0 - alpha))).sqrt();
    let q = ((1.0 - alpha) * (snr + alpha)).sqrt();
    Ok(p / (p + q))
}

/// The same root written the textbook way, dividing by `S (1 - 2 alpha)`,
/// with the `alpha = 1/2` branch and a fallback to the linear root when
/// `|1 - 2 alpha| < 1e-9`. Kept as an independent route for cross-checks.
pub fn optimal_eps_bar_quadratic_formula(alpha: f64, snr: f64) -> Result<f64> {
    require_unit_open("alpha", alpha)?;
    require_positive("snr", snr)?;
    let s = snr;
    if (1.0 - 2.0 * alpha).abs() < 1e-9 {
        let b = 2.0 * alpha * (s + 1.0) - 2.0 * alpha * alpha;
        let c = alpha * alpha - alpha * (s + 1.0);
        return Ok(-c / b);
    }
    let a2 = alpha * alpha;
    let disc = alpha * (s + s * s) + (1.0 - s - s * s) * a2 - 2.0 * a2 * alpha + a2 * a2;
    Ok((-(alpha * (s + 1.0) - a2) + disc.sqrt()) / (s * (1.0 - 2.0 * alpha)))
}

/// Left side of the stationarity quadratic
/// `eps^2 S (1 - 2a) + eps (2a(S+1) - 2a^2) + a^2 - a(S+1)`.
pub fn eps_bar_quadratic(alpha: f64, snr: f64, eps: f64) -> f64 {
    let qa = snr * (1.0 - 2.0 * alpha);
    let qb = 2.0 * alpha * (snr + 1.0) - 2.0 * alpha * alpha;
    let qc = alpha * alpha - alpha * (snr + 1.0);
    qa * eps * eps + qb * eps + qc
}

/// [`eps_bar_quadratic`] divided by the magnitude of its three terms, so it
/// is comparable across `(alpha, S)`.
pub fn quadratic_residual(alpha: f64, snr: f64, eps: f64) -> f64 {
    let qa = snr * (1.0 - 2.0 * alpha);
    let qb = 2.0 * alpha * (snr + 1.0) - 2.0 * alpha * alpha;
    let qc = alpha * alpha - alpha * (snr + 1.0);
    let scale = (qa * eps * eps).abs() + (qb * eps).abs() + qc.abs();
    eps_bar_quadratic(alpha, snr, eps) / scale
}

/// Numerator of `dx / d eps_bar`; its denominator `S^2 (1-eps)^2 eps^2` is
/// positive, so the sign of this value is the sign of the derivative.
pub fn eps_bar_derivative_numerator(alpha: f64, snr: f64, eps: f64) -> Result<f64> {
    require_unit_open("alpha", alpha)?;
    require_unit_open("eps_bar", eps)?;
    require_positive("snr", snr)?;
    let s = snr;
    Ok(alpha * alpha * (1.0 - 2.0 * eps)
        - alpha * (2.0 * s * eps * eps - 2.0 * s * eps + s - 2.0 * eps + 1.0)
        + s * eps * eps)
}

/// Policy with `alpha = K / L`, one pilot per user and the optimal power
/// fraction.
pub fn optimal_policy(config: &SystemConfig, k: usize) -> Result<TrainingPolicy> {
    let alpha = optimal_alpha(k, config.block_length())?;
    let eps = optimal_eps_bar(alpha, config.snr())?;
    TrainingPolicy::from_power_fraction(config, k, 1, eps)
}

/// Effective inverse SNR at the optimal policy for `k` users.
pub fn optimal_inverse_snr(k: usize, l: usize, snr: f64) -> Result<f64> {
    let alpha = optimal_alpha(k, l)?;
    inverse_snr(alpha, optimal_eps_bar(alpha, snr)?, snr)
}

/// Rate lower bound at the optimal policy for `k` users.
pub fn optimal_rate_for(config: &SystemConfig, k: usize) -> Result<RateResult> {
    let l = config.block_length();
    let x = optimal_inverse_snr(k, l, config.snr())?;
    rate::rate_lower_bound(k as f64 / l as f64, k, x)
}

/// Exhaustive search over `K in 1..L`.
pub fn optimal_user_count(config: &SystemConfig) -> Result<OptimizationReport> {
    optimal_user_count_up_to(config, config.block_length() - 1)
}

/// Exhaustive search over `K in 1..=k_max` (clamped to `L - 1`).
///
/// Every `K` is evaluated, possibly in parallel; the reduction runs in `K`
/// order and keeps the smallest maximizer, so the result does not depend on
/// the thread count.
pub fn optimal_user_count_up_to(config: &SystemConfig, k_max: usize) -> Result<OptimizationReport> {
    let k_max = k_max.min(config.block_length() - 1);
    if k_max == 0 {
        return Err(domain("k_max", "must be at least 1"));
    }
    evaluate_candidates(config, (1..=k_max).collect())
}

/// Slack added to the Jensen bound before discarding a user count, covering
/// the quadrature error of the incumbent.
const PRUNE_MARGIN: f64 = 1e-9;

/// Same maximizer as [`optimal_user_count`], found without evaluating every
/// `K`.
///
/// Each rate is dominated by its Jensen bound `(1 - K/L) ln(1 + H_K / x)`,
/// which costs a few flops. A golden-section pass over the exact rate
/// supplies an incumbent, and only the user counts whose bound reaches the
/// incumbent are evaluated. The result (including the smallest-`K`
/// tie-break) equals the exhaustive one; `sweep` holds only the evaluated
/// points.
pub fn optimal_user_count_pruned(config: &SystemConfig) -> Result<OptimizationReport> {
    let l = config.block_length();
    let snr = config.snr();
    let k_max = l - 1;
    let exact = |k: usize| optimal_rate_for(config, k).map_or(0.0, |r| r.value);

    let (mut lo, mut hi) = (1usize, k_max);
    while hi - lo > 3 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        if exact(m1) < exact(m2) {
            lo = m1 + 1;
        } else {
            hi = m2;
        }
    }
    let incumbent = (lo..=hi).map(exact).fold(f64::NEG_INFINITY, f64::max);

    let mut candidates = Vec::new();
    let mut harmonic = 0.0;
    for k in 1..=k_max {
        harmonic += 1.0 / k as f64;
        let alpha = k as f64 / l as f64;
        let bound = optimal_eps_bar(alpha, snr)
            .and_then(|eps| inverse_snr(alpha, eps, snr))
            .map_or(f64::INFINITY, |x| (1.0 - alpha) * (harmonic / x).ln_1p());
        if bound + PRUNE_MARGIN >= incumbent {
            candidates.push(k);
        }
    }
    evaluate_candidates(config, candidates)
}

fn evaluate_candidates(config: &SystemConfig, users: Vec<usize>) -> Result<OptimizationReport> {
    let evaluated: Vec<Option<f64>> = users
        .par_iter()
        .map(|&k| optimal_rate_for(config, k).ok().map(|r| r.value))
        .collect();

    let mut sweep = Vec::with_capacity(users.len());
    let mut infeasible = Vec::new();
    let mut best: Option<SweepPoint> = None;
    for (&users, rate) in users.iter().zip(evaluated) {
        let rate = rate.unwrap_or_else(|| {
            infeasible.push(users);
            0.0
        });
        let point = SweepPoint { users, rate };
        if best.is_none_or(|b| rate > b.rate) {
            best = Some(point);
        }
        sweep.push(point);
    }

    let k_star = best
        .ok_or_else(|| domain("users", "no candidate user count"))?
        .users;
    let policy = optimal_policy(config, k_star)?;
    let stats = EstimationStats::new(&policy, config)?;
    let rate = optimal_rate_for(config, k_star)?;
    let quadratic_residual = quadratic_residual(policy.alpha(), config.snr(), policy.eps_bar());
    Ok(OptimizationReport {
        k_star,
        policy,
        stats,
        rate,
        quadratic_residual,
        sweep,
        infeasible,
    })
}

/// `K_a*`: maximizer of the second rate approximation over `K in 2..L`,
/// smallest `K` on ties.
pub fn approx_user_count(config: &SystemConfig) -> Result<usize> {
    let l = config.block_length();
    if l < 3 {
        return Err(domain(
            "block_length",
            format!("need L >= 3 for K in 2..L, got {l}"),
        ));
    }
    let lf = l as f64;
    let snr = config.snr();
    let mut best = (2, f64::NEG_INFINITY);
    for k in 2..l {
        let v = rate::approx_rate_a2(k as f64, lf, snr)?;
        if v > best.1 {
            best = (k, v);
        }
    }
    Ok(best.0)
}

/// Maximizer of the first rate approximation (at the optimal power fraction)
/// over `K in 2..L`, smallest `K` on ties.
pub fn approx_a1_user_count(config: &SystemConfig) -> Result<usize> {
    let l = config.block_length();
    if l < 3 {
        return Err(domain(
            "block_length",
            format!("need L >= 3 for K in 2..L, got {l}"),
        ));
    }
    let snr = config.snr();
    let mut best = (2, f64::NEG_INFINITY);
    for k in 2..l {
        let x = optimal_inverse_snr(k, l, snr)?;
        let v = rate::approx_rate_a1(k as f64, l as f64, x)?;
        if v > best.1 {
            best = (k, v);
        }
    }
    Ok(best.0)
}

/// Left minus right side of the first-order condition for maximizing the
/// second approximation over real `K`. Positive where that approximation is
/// still increasing in `K`.
pub fn stationarity_residual(k: f64, l: f64, snr: f64) -> Result<f64> {
    if !(k >= 2.0) || !(k <= l - 1.0) {
        return Err(domain(
            "users",
            format!("need 2 <= K <= L - 1, got K = {k}, L = {l}"),
        ));
    }
    require_positive("snr", snr)?;
    let c = 2.0 * ((snr + 1.0) / snr).sqrt();
    let r = (k / l).sqrt();
    let lnk = crate::numerics::ln(k);
    let shrink = 1.0 - c * r;
    let lhs = snr * (l - k) * (2.0 * shrink - lnk * c * r) / (2.0 * k * (snr * shrink * lnk + 1.0));
    let rhs = (snr * shrink * lnk).ln_1p();
    Ok(lhs - rhs)
}
