//! Large-block-length expansions of the optimal parameters.
//!
//! Each expansion is reported as a leading term plus its first correction.
//! Remainder terms are dropped; accuracy is judged by comparing against an
//! exact optimum rather than by remainder bounds.

use serde::Serialize;

use crate::error::{domain, require_positive, Result};
use crate::model::{mmse_error_variance, SystemConfig};
use crate::numerics::{ln, ln_ln};
use crate::optimizer::{approx_user_count, optimal_eps_bar};

/// First- and second-order values of one parameter, with the exact value
/// when one is available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionResult {
    pub first_order: f64,
    pub second_order: f64,
    pub exact: Option<f64>,
    pub rel_err_first: Option<f64>,
    pub rel_err_second: Option<f64>,
}

impl ExpansionResult {
    pub fn new(first_order: f64, correction: f64, exact: Option<f64>) -> Self {
        let second_order = first_order + correction;
        let rel = |approx: f64| exact.map(|e| ((e - approx) / e).abs());
        Self {
            first_order,
            second_order,
            exact,
            rel_err_first: rel(first_order),
            rel_err_second: rel(second_order),
        }
    }

    pub fn correction(&self) -> f64 {
        self.second_order - self.first_order
    }

    /// Whether the two-term value is strictly closer to the exact one.
    pub fn second_order_closer(&self) -> Option<bool> {
        self.exact
            .map(|e| (e - self.second_order).abs() < (e - self.first_order).abs())
    }
}

fn check_ratio(k: f64, l: f64) -> Result<()> {
    if !(k >= 1.0) || !(k < l) || !l.is_finite() {
        return Err(domain(
            "users",
            format!("need 1 <= K < L, got K = {k}, L = {l}"),
        ));
    }
    Ok(())
}

/// Training power fraction for fixed `K`, `L`:
/// `sqrt((S+1)/S) sqrt(K/L) - ((S+1)/S) K/L`.
pub fn eps_bar_expansion(k: f64, l: f64, snr: f64) -> Result<ExpansionResult> {
    check_ratio(k, l)?;
    require_positive("snr", snr)?;
    let ratio = k / l;
    let g = (snr + 1.0) / snr;
    let exact = optimal_eps_bar(ratio, snr)?;
    Ok(ExpansionResult::new(
        g.sqrt() * ratio.sqrt(),
        -g * ratio,
        Some(exact),
    ))
}

/// Pilot power for fixed `K`, `L`: `P sqrt((S+1)/S) sqrt(L/K) - P (S+1)/S`.
pub fn training_power_expansion(k: f64, l: f64, snr: f64, power: f64) -> Result<ExpansionResult> {
    check_ratio(k, l)?;
    require_positive("snr", snr)?;
    require_positive("power", power)?;
    let g = (snr + 1.0) / snr;
    let exact = optimal_eps_bar(k / l, snr)? * power * l / k;
    Ok(ExpansionResult::new(
        power * g.sqrt() * (l / k).sqrt(),
        -power * g,
        Some(exact),
    ))
}

/// Estimation error variance at the optimal pilot power for fixed `K`, `L`:
/// `(sz2/P) sqrt(S/(S+1)) sqrt(K/L) + (sz2/P) (S/(S+1)) K/L`.
pub fn error_variance_expansion(
    k: f64,
    l: f64,
    snr: f64,
    power: f64,
    sigma_z2: f64,
) -> Result<ExpansionResult> {
    check_ratio(k, l)?;
    require_positive("snr", snr)?;
    require_positive("power", power)?;
    require_positive("sigma_z2", sigma_z2)?;
    let ratio = k / l;
    let h = snr / (snr + 1.0);
    let scale = sigma_z2 / power;
    let pilot_power = optimal_eps_bar(ratio, snr)? * power / ratio;
    let sigma_h2 = snr * sigma_z2 / power;
    let exact = mmse_error_variance(sigma_h2, 1, pilot_power, sigma_z2)?;
    Ok(ExpansionResult::new(
        scale * h.sqrt() * ratio.sqrt(),
        scale * h * ratio,
        Some(exact),
    ))
}

/// Block length implied by a maximizing user count `K` of the second rate
/// approximation, truncated after two terms:
/// `((S+1)/S) K (ln K)^2 + 2 K ln K ln ln K`.
pub fn implicit_l_of_k(k: f64, snr: f64) -> Result<f64> {
    if !(k >= 3.0) {
        return Err(domain(
            "users",
            format!("need K >= 3 so that ln ln K > 0, got {k}"),
        ));
    }
    require_positive("snr", snr)?;
    let lk = ln(k);
    Ok((snr + 1.0) / snr * k * lk * lk + 2.0 * k * lk * ln_ln(k))
}

/// Expansions of every optimal parameter in terms of `L` alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LargeBlockExpansions {
    pub users: ExpansionResult,
    pub alpha: ExpansionResult,
    pub eps_bar: ExpansionResult,
    pub pilot_power: ExpansionResult,
    pub error_variance: ExpansionResult,
    /// User count the exact values were evaluated at.
    pub exact_users: Option<usize>,
}

impl LargeBlockExpansions {
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &ExpansionResult)> {
        [
            ("users", &self.users),
            ("alpha", &self.alpha),
            ("eps_bar", &self.eps_bar),
            ("pilot_power", &self.pilot_power),
            ("error_variance", &self.error_variance),
        ]
        .into_iter()
    }
}

const MIN_EXPANSION_L: f64 = 16.0;

/// Expansions with the exact values taken at `K_a*`, the maximizer of the
/// second rate approximation.
pub fn expansions_at_approx_optimum(config: &SystemConfig) -> Result<LargeBlockExpansions> {
    let k = approx_user_count(config)?;
    large_block_expansions(config, Some(k))
}

/// Expansions in `L` alone; when `exact_users` is given, the exact columns
/// are the optimal policy parameters at that user count.
pub fn large_block_expansions(
    config: &SystemConfig,
    exact_users: Option<usize>,
) -> Result<LargeBlockExpansions> {
    let l = config.block_length() as f64;
    if l < MIN_EXPANSION_L {
        return Err(domain(
            "block_length",
            format!("expansions need L >= 16, got {l}"),
        ));
    }
    let s = config.snr();
    let p = config.power();
    let sz2 = config.sigma_z2();
    let lnl = ln(l);
    let lll = ln_ln(l);

    let exact = match exact_users {
        Some(k) => {
            if k == 0 || k as f64 >= l {
                return Err(domain("users", format!("need 1 <= K < L, got {k}")));
            }
            let alpha = k as f64 / l;
            let eps = optimal_eps_bar(alpha, s)?;
            let pt = eps * p / alpha;
            let se2 = mmse_error_variance(config.sigma_h2(), 1, pt, sz2)?;
            Some((k as f64, alpha, eps, pt, se2))
        }
        None => None,
    };

    let k_first = s / (s + 1.0) * l / (lnl * lnl);
    let k_corr = s * (2.0 * s + 4.0) / ((s + 1.0) * (s + 1.0)) * l * lll / (lnl * lnl * lnl);
    Ok(LargeBlockExpansions {
        users: ExpansionResult::new(k_first, k_corr, exact.map(|e| e.0)),
        alpha: ExpansionResult::new(k_first / l, k_corr / l, exact.map(|e| e.1)),
        eps_bar: ExpansionResult::new(
            1.0 / lnl,
            (s + 2.0) / (s + 1.0) * lll / (lnl * lnl),
            exact.map(|e| e.2),
        ),
        pilot_power: ExpansionResult::new(
            p * (s + 1.0) / s * lnl,
            -p * (s + 2.0) / s * lll,
            exact.map(|e| e.3),
        ),
        error_variance: ExpansionResult::new(
            sz2 / p / lnl,
            sz2 / p * s * (s + 2.0) / ((s + 1.0) * (s + 1.0)) * lll / (lnl * lnl),
            exact.map(|e| e.4),
        ),
        exact_users,
    })
}

/// Leading behaviour of the optimized rate, `ln ln L + ln S`. Needs
/// `L > e` so that the double logarithm is defined and positive.
pub fn asymptotic_rate(l: f64, snr: f64) -> Result<f64> {
    if !(l > std::f64::consts::E) {
        return Err(domain("block_length", format!("need L > e, got {l}")));
    }
    require_positive("snr", snr)?;
    Ok(ln_ln(l) + ln(snr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eps_expansion_vanishes_with_ratio() {
        let r = eps_bar_expansion(1.0, 1e300, 10.0).unwrap();
        assert!(r.first_order < 1e-149 && r.second_order.abs() < 1e-149);
    }

    #[test]
    fn eps_second_order_better_at_small_ratio() {
        let r = eps_bar_expansion(100.0, 1e6, 10.0).unwrap();
        assert!(r.rel_err_second.unwrap() < r.rel_err_first.unwrap());
    }

    #[test]
    fn eps_error_ratio_shrinks_along_sqrt_l() {
        let ratios: Vec<f64> = [1e3, 1e4, 1e5, 1e6]
            .iter()
            .map(|&l: &f64| {
                let r = eps_bar_expansion(l.sqrt().floor(), l, 10.0).unwrap();
                r.rel_err_second.unwrap() / r.rel_err_first.unwrap()
            })
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
    }

    #[test]
    fn training_power_leading_term_and_homogeneity() {
        let s2 = 1e-4;
        let r = training_power_expansion(1e6 * s2, 1e6, 10.0, 1.0).unwrap();
        assert_relative_eq!(
            r.first_order,
            1.1f64.sqrt() / s2.sqrt(),
            max_relative = 1e-12
        );
        let r2 = training_power_expansion(1e6 * s2, 1e6, 10.0, 2.0).unwrap();
        assert_relative_eq!(r2.first_order, 2.0 * r.first_order, max_relative = 1e-15);
        assert_relative_eq!(r2.correction(), 2.0 * r.correction(), max_relative = 1e-15);
        let r3 = training_power_expansion(100.0, 1e6, 10.0, 1.0).unwrap();
        assert!(r3.rel_err_second.unwrap() < r3.rel_err_first.unwrap());
    }

    #[test]
    fn error_variance_expansion_behaviour() {
        let r = error_variance_expansion(100.0, 1e6, 10.0, 1.0, 0.1).unwrap();
        assert!(r.rel_err_second.unwrap() < r.rel_err_first.unwrap());
        let tiny = error_variance_expansion(1.0, 1e300, 10.0, 1.0, 0.1).unwrap();
        assert!(tiny.first_order < 1e-150);
        // Scaling P and sigma_z^2 together fixes S and sigma_z^2 / P.
        let scaled = error_variance_expansion(100.0, 1e6, 10.0, 3.0, 0.3).unwrap();
        assert_relative_eq!(scaled.first_order, r.first_order, max_relative = 1e-14);
        assert_relative_eq!(scaled.second_order, r.second_order, max_relative = 1e-14);
        assert_relative_eq!(
            scaled.exact.unwrap(),
            r.exact.unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn implicit_l_substitution() {
        let k = std::f64::consts::E.powf(std::f64::consts::E);
        let e = std::f64::consts::E;
        let want = 1.1 * k * e * e + 2.0 * k * e;
        assert_relative_eq!(
            implicit_l_of_k(k, 10.0).unwrap(),
            want,
            max_relative = 1e-13
        );
        assert!(implicit_l_of_k(2.9, 10.0).is_err());
        let mut prev = 0.0;
        for k in 3..200 {
            let v = implicit_l_of_k(k as f64, 10.0).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn users_first_order_arithmetic() {
        let config = SystemConfig::reference(1_000_000).unwrap();
        let t = large_block_expansions(&config, None).unwrap();
        let lnl = (1e6f64).ln();
        assert_relative_eq!(
            t.users.first_order,
            10.0 / 11.0 * 1e6 / (lnl * lnl),
            max_relative = 1e-14
        );
        assert!(t.users.exact.is_none());
        assert!(large_block_expansions(&SystemConfig::reference(15).unwrap(), None).is_err());
    }

    #[test]
    fn asymptotic_rate_values() {
        let l = std::f64::consts::E.powf(std::f64::consts::E);
        assert_relative_eq!(asymptotic_rate(l, 1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert!(asymptotic_rate(1e4, 10.0).unwrap() > asymptotic_rate(1e3, 10.0).unwrap());
        assert!(asymptotic_rate(1e4, 11.0).unwrap() > asymptotic_rate(1e4, 10.0).unwrap());
        assert!(asymptotic_rate(2.0, 10.0).is_err());
    }
}
