//! System constants, power accounting and MMSE estimation statistics.
//!
//! All powers and variances are linear. A [`TrainingPolicy`] can only be
//! built through constructors that derive the time fraction, the training
//! power fraction and the data power together, so the power budget is met
//! with equality by construction.

use crate::error::{domain, require_positive, require_unit_open, Error, Result};

/// Physical constants of the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    power: f64,
    sigma_h2: f64,
    sigma_z2: f64,
    block_length: usize,
}

impl SystemConfig {
    pub fn new(power: f64, sigma_h2: f64, sigma_z2: f64, block_length: usize) -> Result<Self> {
        require_positive("power", power)?;
        require_positive("sigma_h2", sigma_h2)?;
        require_positive("sigma_z2", sigma_z2)?;
        if block_length < 2 {
            return Err(domain(
                "block_length",
                format!("must be at least 2, got {block_length}"),
            ));
        }
        Ok(Self {
            power,
            sigma_h2,
            sigma_z2,
            block_length,
        })
    }

    /// P = 1, sigma_h^2 = 1, sigma_z^2 = 0.1 (S = 10) at the given block length.
    pub fn reference(block_length: usize) -> Result<Self> {
        Self::new(1.0, 1.0, 0.1, block_length)
    }

    /// Same channel constants with a different block length.
    pub fn with_block_length(&self, block_length: usize) -> Result<Self> {
        Self::new(self.power, self.sigma_h2, self.sigma_z2, block_length)
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn sigma_h2(&self) -> f64 {
        self.sigma_h2
    }

    pub fn sigma_z2(&self) -> f64 {
        self.sigma_z2
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    /// Overall SNR `S = P sigma_h^2 / sigma_z^2`.
    pub fn snr(&self) -> f64 {
        self.power * self.sigma_h2 / self.sigma_z2
    }
}

/// A fully resolved operating point: how many users train, for how long, and
/// how the power budget is split between pilots and data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingPolicy {
    users: usize,
    pilots_per_user: usize,
    alpha: f64,
    eps_bar: f64,
    pilot_power: f64,
    data_power: f64,
}

impl TrainingPolicy {
    /// Builds a policy from an explicit pilot transmit power.
    pub fn new(
        config: &SystemConfig,
        users: usize,
        pilots_per_user: usize,
        pilot_power: f64,
    ) -> Result<Self> {
        let alpha = training_fraction(config, users, pilots_per_user)?;
        require_positive("pilot_power", pilot_power)?;
        let data_power = data_power(config.power, alpha, pilot_power)?;
        Ok(Self {
            users,
            pilots_per_user,
            alpha,
            eps_bar: alpha * pilot_power / config.power,
            pilot_power,
            data_power,
        })
    }

    /// Builds a policy from the fraction of the power budget spent on
    /// training; the pilot power follows as `eps_bar P / alpha`.
    pub fn from_power_fraction(
        config: &SystemConfig,
        users: usize,
        pilots_per_user: usize,
        eps_bar: f64,
    ) -> Result<Self> {
        let alpha = training_fraction(config, users, pilots_per_user)?;
        if eps_bar >= 1.0 {
            return Err(Error::Infeasible {
                training: eps_bar * config.power,
                budget: config.power,
            });
        }
        require_unit_open("eps_bar", eps_bar)?;
        let pilot_power = eps_bar * config.power / alpha;
        let data_power = config.power * (1.0 - eps_bar) / (1.0 - alpha);
        Ok(Self {
            users,
            pilots_per_user,
            alpha,
            eps_bar,
            pilot_power,
            data_power,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn pilots_per_user(&self) -> usize {
        self.pilots_per_user
    }

    /// Fraction of the block spent on training, `K T_bar / L`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Fraction of the power budget spent on training, `alpha P_T / P`.
    pub fn eps_bar(&self) -> f64 {
        self.eps_bar
    }

    pub fn pilot_power(&self) -> f64 {
        self.pilot_power
    }

    pub fn data_power(&self) -> f64 {
        self.data_power
    }
}

fn training_fraction(config: &SystemConfig, users: usize, pilots_per_user: usize) -> Result<f64> {
    let l = config.block_length;
    if users == 0 || users >= l {
        return Err(domain(
            "users",
            format!("must lie in 1..={}, got {users}", l - 1),
        ));
    }
    if pilots_per_user == 0 {
        return Err(domain("pilots_per_user", "must be at least 1"));
    }
    let pilots = users
        .checked_mul(pilots_per_user)
        .filter(|&t| t < l)
        .ok_or_else(|| {
            domain(
                "pilots_per_user",
                format!("{users} users x {pilots_per_user} pilots leaves no data symbols in a block of {l}"),
            )
        })?;
    Ok(pilots as f64 / l as f64)
}

/// Channel-estimate statistics for one user under a given policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationStats {
    /// MMSE error variance.
    pub sigma_e2: f64,
    /// Variance of the channel estimate.
    pub sigma_hhat2: f64,
    /// Effective inverse SNR `(P_D sigma_e^2 + sigma_z^2) / (P_D sigma_hhat^2)`.
    pub x: f64,
}

impl EstimationStats {
    /// Evaluates the statistics from the error variance and data power,
    /// valid for any number of pilots per user.
    pub fn new(policy: &TrainingPolicy, config: &SystemConfig) -> Result<Self> {
        let energy = policy.pilots_per_user as f64 * policy.pilot_power;
        let sigma_e2 = mmse_error_variance(
            config.sigma_h2,
            policy.pilots_per_user,
            policy.pilot_power,
            config.sigma_z2,
        )?;
        let gain = config.sigma_h2 * energy;
        let sigma_hhat2 = config.sigma_h2 * gain / (gain + config.sigma_z2);
        let pd = policy.data_power;
        let x = (pd * sigma_e2 + config.sigma_z2) / (pd * sigma_hhat2);
        Ok(Self {
            sigma_e2,
            sigma_hhat2,
            x,
        })
    }
}

/// MMSE channel-estimation error variance after `pilots` symbols at power
/// `pilot_power`.
pub fn mmse_error_variance(
    sigma_h2: f64,
    pilots: usize,
    pilot_power: f64,
    sigma_z2: f64,
) -> Result<f64> {
    require_positive("sigma_h2", sigma_h2)?;
    require_positive("sigma_z2", sigma_z2)?;
    if !(pilot_power >= 0.0) || !pilot_power.is_finite() {
        return Err(domain(
            "pilot_power",
            format!("must be finite and >= 0, got {pilot_power}"),
        ));
    }
    // sigma_h2 (1 - a / (a + sigma_z2)) rearranged to avoid the subtraction.
    let gain = sigma_h2 * pilots as f64 * pilot_power;
    // The ratio is at most 1 after rounding, so the result never exceeds sigma_h2.
    Ok(sigma_h2 * (sigma_z2 / (gain + sigma_z2)))
}

/// Data-phase power that meets the average power constraint with equality.
pub fn data_power(power: f64, alpha: f64, pilot_power: f64) -> Result<f64> {
    require_positive("power", power)?;
    require_unit_open("alpha", alpha)?;
    let training = alpha * pilot_power;
    if training >= power {
        return Err(Error::Infeasible {
            training,
            budget: power,
        });
    }
    Ok((power - training) / (1.0 - alpha))
}

/// Effective inverse SNR of a single-pilot policy in closed form.
pub fn effective_inverse_snr(policy: &TrainingPolicy, config: &SystemConfig) -> Result<f64> {
    if policy.pilots_per_user != 1 {
        return Err(domain(
            "pilots_per_user",
            format!(
                "closed form needs one pilot per user, got {}",
                policy.pilots_per_user
            ),
        ));
    }
    inverse_snr(policy.alpha, policy.eps_bar, config.snr())
}

/// `x = (1 + alpha / (S eps)) (1 + (1 - alpha) / (S (1 - eps))) - 1`.
pub fn inverse_snr(alpha: f64, eps_bar: f64, snr: f64) -> Result<f64> {
    require_unit_open("alpha", alpha)?;
    require_unit_open("eps_bar", eps_bar)?;
    require_positive("snr", snr)?;
    let a = alpha / (snr * eps_bar);
    let b = (1.0 - alpha) / (snr * (1.0 - eps_bar));
    // (1 + a)(1 + b) - 1 without the cancellation.
    Ok(a + b + a * b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn error_variance_examples() {
        assert_eq!(mmse_error_variance(1.0, 1, 0.0, 0.1).unwrap(), 1.0);
        assert_relative_eq!(
            mmse_error_variance(1.0, 1, 0.1, 0.1).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            mmse_error_variance(1.0, 2, 0.45, 0.1).unwrap(),
            0.1,
            epsilon = 1e-15
        );
    }

    #[test]
    fn error_variance_rejects_bad_variances() {
        assert!(matches!(
            mmse_error_variance(0.0, 1, 1.0, 0.1),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            mmse_error_variance(1.0, 1, 1.0, -0.1),
            Err(Error::Domain { .. })
        ));
        assert!(mmse_error_variance(1.0, 1, f64::NAN, 0.1).is_err());
    }

    #[test]
    fn data_power_examples() {
        assert_relative_eq!(data_power(1.0, 0.5, 1.0).unwrap(), 1.0);
        assert_relative_eq!(data_power(1.0, 0.2, 2.0).unwrap(), 0.75, epsilon = 1e-15);
        assert!(matches!(
            data_power(1.0, 0.2, 5.0),
            Err(Error::Infeasible { .. })
        ));
        // The boundary alpha P_T = P is rejected as well.
        assert!(matches!(
            data_power(1.0, 0.5, 2.0),
            Err(Error::Infeasible { .. })
        ));
        assert!(matches!(
            data_power(1.0, 1.0, 0.5),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            data_power(1.0, 0.0, 0.5),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn inverse_snr_symmetric_point() {
        assert_relative_eq!(inverse_snr(0.5, 0.5, 10.0).unwrap(), 0.21, epsilon = 1e-15);
    }

    #[test]
    fn inverse_snr_small_alpha_limit() {
        let x = inverse_snr(1e-12, 0.5, 10.0).unwrap();
        assert!((x - 0.2).abs() < 1e-10);
    }

    #[test]
    fn inverse_snr_rejects_boundary_fractions() {
        assert!(inverse_snr(0.1, 0.0, 10.0).is_err());
        assert!(inverse_snr(0.1, 1.0, 10.0).is_err());
    }

    #[test]
    fn closed_form_matches_general_route() {
        // alpha = 0.1, eps_bar = 0.3, S = 10 with L = 100, K = 10.
        let config = SystemConfig::reference(100).unwrap();
        let policy = TrainingPolicy::from_power_fraction(&config, 10, 1, 0.3).unwrap();
        let closed = effective_inverse_snr(&policy, &config).unwrap();
        // Independent chain: error variance and data power by hand.
        let pt = 0.3 / 0.1;
        let se = 1.0 - pt / (pt + 0.1);
        let pd = (1.0 - 0.1 * pt) / 0.9;
        let general = (pd * se + 0.1) / (pd * (1.0 - se));
        assert_relative_eq!(closed, general, max_relative = 1e-10);
        let stats = EstimationStats::new(&policy, &config).unwrap();
        assert_relative_eq!(stats.x, closed, max_relative = 1e-10);
    }

    #[test]
    fn policy_rejects_out_of_range() {
        let config = SystemConfig::reference(10).unwrap();
        assert!(TrainingPolicy::new(&config, 0, 1, 1.0).is_err());
        assert!(TrainingPolicy::new(&config, 10, 1, 1.0).is_err());
        assert!(TrainingPolicy::new(&config, 5, 2, 1.0).is_err());
        assert!(TrainingPolicy::new(&config, 3, 3, 1.0).is_ok());
        assert!(matches!(
            TrainingPolicy::new(&config, 5, 1, 2.0),
            Err(Error::Infeasible { .. })
        ));
        assert!(matches!(
            TrainingPolicy::from_power_fraction(&config, 5, 1, 1.0),
            Err(Error::Infeasible { .. })
        ));
        assert!(TrainingPolicy::from_power_fraction(&config, 5, 1, 0.0).is_err());
    }

    #[test]
    fn closed_form_requires_single_pilot() {
        let config = SystemConfig::reference(100).unwrap();
        let policy = TrainingPolicy::new(&config, 5, 2, 1.0).unwrap();
        assert!(effective_inverse_snr(&policy, &config).is_err());
        assert!(EstimationStats::new(&policy, &config).is_ok());
    }

    #[test]
    fn config_validation() {
        assert!(SystemConfig::new(1.0, 1.0, 0.1, 1).is_err());
        assert!(SystemConfig::new(0.0, 1.0, 0.1, 10).is_err());
        assert!(SystemConfig::new(1.0, -1.0, 0.1, 10).is_err());
        assert_relative_eq!(
            SystemConfig::reference(250).unwrap().snr(),
            10.0,
            epsilon = 1e-12
        );
    }
}
