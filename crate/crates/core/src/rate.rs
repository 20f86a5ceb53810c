//! Achievable-rate lower bound for strongest-estimate scheduling, its two
//! closed-form approximations, and the Jensen upper bound.
//!
//! The expectation over the strongest of `K` unit-exponential gains is
//! evaluated two independent ways: adaptive quadrature against the order
//! statistic density, and an inclusion–exclusion series of exponential
//! integrals carried in double-double arithmetic.

use crate::error::{domain, require_positive, require_unit_open, Error, Result};
use crate::model::{effective_inverse_snr, EstimationStats, SystemConfig, TrainingPolicy};
use crate::numerics::{
    self, binomial, integrate_adaptive, scaled_exp_integral_e1_dd, DoubleDouble, QuadratureOptions,
};

/// Largest user count the series oracle accepts.
pub const SERIES_MAX_USERS: usize = 30;

/// Target absolute error of the quadrature evaluator, in nats.
pub const QUADRATURE_ABS_TOL: f64 = 1e-10;

/// Value the second approximation takes where its logarithm argument is not
/// positive, so maximization loops skip that region without special cases.
pub const A2_INFEASIBLE: f64 = f64::MIN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMethod {
    Quadrature,
    Series,
    MonteCarlo,
    ClosedApprox,
}

/// A rate in nats per channel use with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RateResult {
    pub value: f64,
    pub method: RateMethod,
    /// Absolute numerical error bound, or a confidence half-width for Monte Carlo.
    pub err_estimate: f64,
    /// Sample count, Monte Carlo only.
    pub n_samples: Option<u64>,
}

/// CDF of the maximum of `k` unit-mean exponentials, `(1 - e^-t)^k`.
pub fn max_exp_cdf(t: f64, k: usize) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(domain("t", format!("must be >= 0, got {t}")));
    }
    require_users(k)?;
    Ok((k as f64 * (-(-t).exp()).ln_1p()).exp())
}

/// Density of the maximum of `k` unit-mean exponentials.
pub fn max_exp_pdf(t: f64, k: usize) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    kf * (-t).exp() * ((kf - 1.0) * (-(-t).exp()).ln_1p()).exp()
}

fn require_users(k: usize) -> Result<()> {
    if k == 0 {
        Err(domain("users", "must be at least 1"))
    } else {
        Ok(())
    }
}

/// Expectation of `ln(1 + T / x)` with `T` the maximum of `k` unit
/// exponentials, returned with the quadrature's absolute error estimate.
///
/// The substitution `u = e^-t` maps the half line onto `(0, 1]`, where the
/// integrand is `ln(1 - ln(u) / x) k (1 - u)^(k-1)`. For large `k` the mass
/// sits near `u = 1/k`, so the initial panels are cut at `e^-d / k`.
pub fn expected_log_max(k: usize, x: f64) -> Result<numerics::Integral> {
    require_users(k)?;
    require_positive("x", x)?;
    let kf = k as f64;
    let km1 = kf - 1.0;
    let integrand = move |u: f64| {
        let t = -u.ln();
        (t / x).ln_1p() * kf * (km1 * (-u).ln_1p()).exp()
    };
    let mut breaks = vec![0.0];
    for d in [48.0f64, 32.0, 16.0, 8.0, 4.0, 2.0, 1.0, 0.0, -1.0, -2.0, -4.0] {
        let u = (-d).exp() / kf;
        if u > 0.0 && u < 1.0 && u > *breaks.last().unwrap() {
            breaks.push(u);
        }
    }
    breaks.push(1.0);
    let opts = QuadratureOptions {
        abs_tol: QUADRATURE_ABS_TOL,
        rel_tol: 0.0,
        max_intervals: 4096,
    };
    Ok(integrate_adaptive(integrand, &breaks, opts))
}

/// Exact inclusion–exclusion value of the same expectation:
/// `sum_{j=1}^k (-1)^(j+1) C(k, j) e^(j x) E1(j x)`.
///
/// Each term is carried in double-double, so the alternating sum stays
/// accurate to roughly 1e-14 for `k <= 30`. Larger `k` is refused.
pub fn expected_log_max_series(k: usize, x: f64) -> Result<f64> {
    require_users(k)?;
    require_positive("x", x)?;
    if k > SERIES_MAX_USERS {
        return Err(Error::UnsupportedRange(format!(
            "series oracle supports at most {SERIES_MAX_USERS} users, got {k}"
        )));
    }
    let mut sum = DoubleDouble::ZERO;
    for j in 1..=k {
        let term = scaled_exp_integral_e1_dd(DoubleDouble::from(x) * j as f64)
            * binomial(k as u64, j as u64);
        sum = if j % 2 == 1 { sum + term } else { sum - term };
    }
    Ok(sum.to_f64())
}

/// Rate lower bound `(1 - alpha) E[ln(1 + T / x)]` from its three scalar inputs.
pub fn rate_lower_bound(alpha: f64, k: usize, x: f64) -> Result<RateResult> {
    require_unit_open("alpha", alpha)?;
    let integral = expected_log_max(k, x)?;
    Ok(RateResult {
        value: ((1.0 - alpha) * integral.value).max(0.0),
        method: RateMethod::Quadrature,
        err_estimate: (1.0 - alpha) * integral.abs_err,
        n_samples: None,
    })
}

fn policy_inverse_snr(policy: &TrainingPolicy, config: &SystemConfig) -> Result<f64> {
    if policy.pilots_per_user() == 1 {
        effective_inverse_snr(policy, config)
    } else {
        Ok(EstimationStats::new(policy, config)?.x)
    }
}

/// Achievable-rate lower bound of a policy, by quadrature.
///
/// Single-pilot policies use the closed-form inverse SNR; longer pilots go
/// through the error-variance route, which is what allows comparing pilot
/// lengths at equal training energy.
pub fn achievable_rate(policy: &TrainingPolicy, config: &SystemConfig) -> Result<RateResult> {
    let x = policy_inverse_snr(policy, config)?;
    rate_lower_bound(policy.alpha(), policy.users(), x)
}

/// `(1 - alpha) ln(1 + H_k / x)`, which dominates the rate lower bound.
pub fn jensen_bound(alpha: f64, k: usize, x: f64) -> Result<f64> {
    require_unit_open("alpha", alpha)?;
    require_users(k)?;
    require_positive("x", x)?;
    Ok((1.0 - alpha) * (numerics::harmonic(k) / x).ln_1p())
}

pub fn jensen_upper_bound(policy: &TrainingPolicy, config: &SystemConfig) -> Result<f64> {
    let x = policy_inverse_snr(policy, config)?;
    jensen_bound(policy.alpha(), policy.users(), x)
}

/// First approximation: `(1 - K/L) ln(1 + ln(K) / x)`. `K` is real so the
/// formula can be probed between integers.
pub fn approx_rate_a1(k: f64, l: f64, x: f64) -> Result<f64> {
    check_user_ratio(k, l)?;
    require_positive("x", x)?;
    Ok((1.0 - k / l) * (numerics::ln(k) / x).ln_1p())
}

/// Second approximation:
/// `(1 - K/L) ln(1 + S (1 - 2 sqrt((S+1)/S) sqrt(K/L)) ln K)`.
///
/// Returns [`A2_INFEASIBLE`] where the logarithm's argument is not positive.
pub fn approx_rate_a2(k: f64, l: f64, snr: f64) -> Result<f64> {
    check_user_ratio(k, l)?;
    require_positive("snr", snr)?;
    let c = 2.0 * ((snr + 1.0) / snr).sqrt();
    let arg = 1.0 + snr * (1.0 - c * (k / l).sqrt()) * numerics::ln(k);
    if arg > 0.0 {
        Ok((1.0 - k / l) * numerics::ln(arg))
    } else {
        Ok(A2_INFEASIBLE)
    }
}

fn check_user_ratio(k: f64, l: f64) -> Result<()> {
    if !(k >= 1.0) || !(l > k) || !l.is_finite() {
        return Err(domain(
            "users",
            format!("need 1 <= K < L, got K = {k}, L = {l}"),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::scaled_exp_integral_e1;
    use approx::assert_relative_eq;

    #[test]
    fn series_survives_heavy_cancellation() {
        // K = 30, x = 1e-3: binomial weights near 1.5e8 cancel to about 8.
        // Reference from 40-digit quadrature.
        let want = 8.246_484_176_326_824;
        assert!((expected_log_max_series(30, 1e-3).unwrap() - want).abs() < 1e-12);
        assert!((expected_log_max(30, 1e-3).unwrap().value - want).abs() < 1e-10);
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(max_exp_cdf(0.0, 5).unwrap(), 0.0);
        let t: f64 = 0.7;
        assert_relative_eq!(
            max_exp_cdf(t, 1).unwrap(),
            1.0 - (-t).exp(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            max_exp_cdf(2f64.ln(), 2).unwrap(),
            0.25,
            max_relative = 1e-14
        );
        assert!(max_exp_cdf(-0.1, 2).is_err());
        assert!(max_exp_cdf(1.0, 0).is_err());
    }

    #[test]
    fn single_user_reduces_to_exponential_integral() {
        // E[ln(1 + T)] for T ~ Exp(1) equals e E1(1).
        let want = 1f64.exp() * crate::numerics::exp_integral_e1(1.0);
        let q = expected_log_max(1, 1.0).unwrap();
        assert!((q.value - want).abs() < 1e-10);
        assert!(q.abs_err <= 1e-9);
        assert_relative_eq!(
            expected_log_max_series(1, 1.0).unwrap(),
            want,
            max_relative = 1e-14
        );
    }

    #[test]
    fn two_term_series() {
        let e = 1f64.exp();
        let want = 2.0 * e * crate::numerics::exp_integral_e1(1.0)
            - e * e * crate::numerics::exp_integral_e1(2.0);
        assert_relative_eq!(
            expected_log_max_series(2, 1.0).unwrap(),
            want,
            max_relative = 1e-13
        );
        let quad = expected_log_max(2, 0.5).unwrap().value;
        assert!((quad - expected_log_max_series(2, 0.5).unwrap()).abs() < 1e-8);
        assert_relative_eq!(
            expected_log_max_series(1, 3.0).unwrap(),
            scaled_exp_integral_e1(3.0),
            max_relative = 1e-14
        );
    }

    #[test]
    fn series_matches_quadrature_at_k10() {
        let q = expected_log_max(10, 0.1).unwrap().value;
        let s = expected_log_max_series(10, 0.1).unwrap();
        assert!((q - s).abs() < 1e-8, "{q} vs {s}");
    }

    #[test]
    fn series_refuses_large_k() {
        assert!(matches!(
            expected_log_max_series(31, 1.0),
            Err(Error::UnsupportedRange(_))
        ));
        assert!(expected_log_max_series(30, 1.0).is_ok());
    }

    #[test]
    fn expected_log_max_rejects_non_positive_x() {
        assert!(expected_log_max(3, 0.0).is_err());
        assert!(expected_log_max(3, -1.0).is_err());
    }

    #[test]
    fn strictly_decreasing_in_x() {
        for k in [1, 2, 7, 20, 50] {
            for x in [0.01, 0.1, 1.0, 10.0] {
                let a = expected_log_max(k, x).unwrap().value;
                let b = expected_log_max(k, 2.0 * x).unwrap().value;
                assert!(a > b, "k = {k}, x = {x}");
            }
        }
    }

    #[test]
    fn large_user_counts_are_resolved() {
        // Mean of the max is H_k ~ ln k + gamma; the log expectation must
        // sit just below ln(1 + H_k / x) and increase with k.
        let mut prev = 0.0;
        for k in [1_000, 10_000, 100_000, 1_000_000] {
            let q = expected_log_max(k, 0.1).unwrap();
            assert!(q.converged && q.abs_err < 1e-9, "{k}: {q:?}");
            let j = (crate::numerics::harmonic(k) / 0.1).ln_1p();
            assert!(q.value < j && q.value > j - 0.1, "{k}: {} vs {j}", q.value);
            assert!(q.value > prev);
            prev = q.value;
        }
    }

    #[test]
    fn jensen_single_user() {
        let x = 0.37;
        assert_relative_eq!(jensen_bound(0.2, 1, x).unwrap(), 0.8 * (1.0 + 1.0 / x).ln());
        let h3 = 11.0 / 6.0;
        assert_relative_eq!(
            jensen_bound(0.2, 3, x).unwrap(),
            0.8 * (1.0 + h3 / x).ln(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn jensen_strictly_above_at_k20() {
        let r = rate_lower_bound(0.1, 20, 0.1).unwrap().value;
        assert!(jensen_bound(0.1, 20, 0.1).unwrap() > r);
    }

    #[test]
    fn rate_vanishes_as_alpha_approaches_one() {
        let r = rate_lower_bound(1.0 - 1e-9, 5, 0.2).unwrap().value;
        assert!(r < 1e-8);
    }

    #[test]
    fn a1_examples() {
        let e = std::f64::consts::E;
        assert_relative_eq!(
            approx_rate_a1(e, 1e300, 1.0).unwrap(),
            2f64.ln(),
            max_relative = 1e-15
        );
        assert_eq!(approx_rate_a1(1.0, 250.0, 0.3).unwrap(), 0.0);
        assert!(approx_rate_a1(0.5, 250.0, 0.3).is_err());
        assert!(approx_rate_a1(250.0, 250.0, 0.3).is_err());
    }

    #[test]
    fn a2_small_ratio_value_and_sentinel() {
        let s: f64 = 10.0;
        let l = 1e6;
        let want = (1.0 - 2e-6)
            * (1.0 + s * 2f64.ln() * (1.0 - 2.0 * 1.1f64.sqrt() * 2e-6f64.sqrt())).ln();
        assert_relative_eq!(
            approx_rate_a2(2.0, l, s).unwrap(),
            want,
            max_relative = 1e-14
        );
        // K/L close to 1 makes the argument negative.
        assert_eq!(approx_rate_a2(900.0, 1000.0, s).unwrap(), A2_INFEASIBLE);
    }
}
