use serde::Serialize;

use super::config::{OutputFormat, RunConfig};
use super::format::{sig12, Table};
use super::CommandKind;
use crate::asymptotics::large_block_expansions;
use crate::error::{Error, Result};
use crate::model::{EstimationStats, SystemConfig, TrainingPolicy};
use crate::numerics::harmonic;
use crate::optimizer::{self, OptimizationReport};
use crate::rate;
use crate::sim::{self, EstimatorDiagnostics};

/// Power-fraction quadratic residual tolerated at a returned root.
const RESIDUAL_TOL: f64 = 1e-9;

/// Renders the output of `kind` under `cfg`.
pub fn run(kind: CommandKind, cfg: &RunConfig) -> Result<String> {
    match kind {
        CommandKind::Optimize => optimize(cfg),
        CommandKind::SweepK => sweep_k(cfg),
        CommandKind::ApproxGap => approx_gap(cfg),
        CommandKind::Scaling => scaling(cfg),
        CommandKind::Simulate => simulate(cfg),
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct SystemSummary {
    power: f64,
    sigma_h2: f64,
    sigma_z2: f64,
    snr: f64,
    block_length: usize,
}

impl From<&SystemConfig> for SystemSummary {
    fn from(c: &SystemConfig) -> Self {
        Self {
            power: c.power(),
            sigma_h2: c.sigma_h2(),
            sigma_z2: c.sigma_z2(),
            snr: c.snr(),
            block_length: c.block_length(),
        }
    }
}

#[derive(Serialize)]
struct SweepRow {
    k: usize,
    rate: f64,
}

fn exhaustive(cfg: &RunConfig) -> Result<(SystemConfig, OptimizationReport)> {
    let system = cfg.system(cfg.block_length())?;
    let k_max = cfg.k_max.unwrap_or(system.block_length() - 1);
    let report = optimizer::optimal_user_count_up_to(&system, k_max)?;
    check_report(&system, &report)?;
    Ok((system, report))
}

fn check_report(system: &SystemConfig, report: &OptimizationReport) -> Result<()> {
    if !(report.quadratic_residual.abs() < RESIDUAL_TOL) {
        return Err(Error::Consistency(format!(
            "power-fraction residual {} at K = {}",
            report.quadratic_residual, report.k_star
        )));
    }
    let p = &report.policy;
    let spent = p.alpha() * p.pilot_power() + (1.0 - p.alpha()) * p.data_power();
    if ((spent - system.power()) / system.power()).abs() > 1e-9 {
        return Err(Error::Consistency(format!(
            "policy spends {spent} against a budget of {}",
            system.power()
        )));
    }
    if report.sweep.iter().any(|pt| pt.rate > report.rate.value) {
        return Err(Error::Consistency(
            "sweep exceeds the reported optimum".into(),
        ));
    }
    Ok(())
}

/// Exhaustive search at one block length: the optimum and the full sweep.
pub fn optimize(cfg: &RunConfig) -> Result<String> {
    let (system, report) = exhaustive(cfg)?;
    let l = system.block_length();
    match cfg.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                system: SystemSummary,
                k_max: usize,
                k_star: usize,
                alpha: f64,
                eps_bar: f64,
                pilot_power: f64,
                data_power: f64,
                sigma_e2: f64,
                sigma_hhat2: f64,
                x: f64,
                rate: f64,
                rate_err_estimate: f64,
                quadratic_residual: f64,
                infeasible: &'a [usize],
                sweep: Vec<SweepRow>,
            }
            let p = &report.policy;
            Ok(json(&Report {
                system: (&system).into(),
                k_max: report.sweep.len(),
                k_star: report.k_star,
                alpha: p.alpha(),
                eps_bar: p.eps_bar(),
                pilot_power: p.pilot_power(),
                data_power: p.data_power(),
                sigma_e2: report.stats.sigma_e2,
                sigma_hhat2: report.stats.sigma_hhat2,
                x: report.stats.x,
                rate: report.rate.value,
                rate_err_estimate: report.rate.err_estimate,
                quadratic_residual: report.quadratic_residual,
                infeasible: &report.infeasible,
                sweep: report
                    .sweep
                    .iter()
                    .map(|pt| SweepRow {
                        k: pt.users,
                        rate: pt.rate,
                    })
                    .collect(),
            }))
        }
        OutputFormat::Csv => {
            let mut t = Table::new(&["k", "alpha", "eps_bar", "pilot_power", "sigma_e2", "rate"])?;
            for pt in &report.sweep {
                let policy = optimizer::optimal_policy(&system, pt.users)?;
                let stats = EstimationStats::new(&policy, &system)?;
                t.row([
                    pt.users.to_string(),
                    sig12(pt.users as f64 / l as f64),
                    sig12(policy.eps_bar()),
                    sig12(policy.pilot_power()),
                    sig12(stats.sigma_e2),
                    sig12(pt.rate),
                ])?;
            }
            t.finish()
        }
    }
}

/// Optimized rate for every user count up to `k_max`.
pub fn sweep_k(cfg: &RunConfig) -> Result<String> {
    let (system, report) = exhaustive(cfg)?;
    match cfg.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => {
            let mut t = Table::new(&["k", "rate"])?;
            for pt in &report.sweep {
                t.row([pt.users.to_string(), sig12(pt.rate)])?;
            }
            t.finish()
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Sweep {
                system: SystemSummary,
                k_star: usize,
                sweep: Vec<SweepRow>,
            }
            Ok(json(&Sweep {
                system: (&system).into(),
                k_star: report.k_star,
                sweep: report
                    .sweep
                    .iter()
                    .map(|pt| SweepRow {
                        k: pt.users,
                        rate: pt.rate,
                    })
                    .collect(),
            }))
        }
    }
}

#[derive(Serialize)]
struct GapRow {
    l: usize,
    k_star: usize,
    rate: f64,
    k_a1: usize,
    rate_a1: f64,
    gap_a1: f64,
    k_a2: usize,
    rate_a2: f64,
    gap_a2: f64,
}

/// Relative gaps `|C - C_a| / C`, each objective at its own maximizer.
pub fn approx_gap(cfg: &RunConfig) -> Result<String> {
    let mut rows = Vec::new();
    for l in cfg.l_grid()? {
        let system = cfg.system(l)?;
        let snr = system.snr();
        let best = optimizer::optimal_user_count_pruned(&system)?;
        let k_a1 = optimizer::approx_a1_user_count(&system)?;
        let x_a1 = optimizer::optimal_inverse_snr(k_a1, l, snr)?;
        let rate_a1 = rate::approx_rate_a1(k_a1 as f64, l as f64, x_a1)?;
        let k_a2 = optimizer::approx_user_count(&system)?;
        let rate_a2 = rate::approx_rate_a2(k_a2 as f64, l as f64, snr)?;
        let c = best.rate.value;
        rows.push(GapRow {
            l,
            k_star: best.k_star,
            rate: c,
            k_a1,
            rate_a1,
            gap_a1: (c - rate_a1).abs() / c,
            k_a2,
            rate_a2,
            gap_a2: (c - rate_a2).abs() / c,
        });
    }
    match cfg.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Json => Ok(json(&rows)),
        OutputFormat::Csv => {
            let mut t = Table::new(&[
                "l", "k_star", "rate", "k_a1", "rate_a1", "gap_a1", "k_a2", "rate_a2", "gap_a2",
            ])?;
            for r in &rows {
                t.row([
                    r.l.to_string(),
                    r.k_star.to_string(),
                    sig12(r.rate),
                    r.k_a1.to_string(),
                    sig12(r.rate_a1),
                    sig12(r.gap_a1),
                    r.k_a2.to_string(),
                    sig12(r.rate_a2),
                    sig12(r.gap_a2),
                ])?;
            }
            t.finish()
        }
    }
}

#[derive(Serialize)]
struct ScalingRow {
    parameter: &'static str,
    l: usize,
    exact: f64,
    first_order: f64,
    second_order: f64,
    approx_optimum: f64,
}

/// Exact optimal parameters (at `K*`) next to both expansions and the values
/// at `K_a*`, grouped by parameter.
pub fn scaling(cfg: &RunConfig) -> Result<String> {
    let grid = cfg.l_grid()?;
    let mut per_l = Vec::with_capacity(grid.len());
    for &l in &grid {
        let system = cfg.system(l)?;
        let k_star = optimizer::optimal_user_count_pruned(&system)?.k_star;
        let k_a = optimizer::approx_user_count(&system)?;
        let exact = large_block_expansions(&system, Some(k_star))?;
        let approx = large_block_expansions(&system, Some(k_a))?;
        if exact.alpha.exact != Some(k_star as f64 / l as f64) {
            return Err(Error::Consistency(format!("alpha at L = {l} is not K*/L")));
        }
        per_l.push((l, exact, approx));
    }
    let mut rows = Vec::new();
    for index in 0..5 {
        for (l, exact, approx) in &per_l {
            let (parameter, e) = exact.iter().nth(index).expect("five parameters");
            let (_, a) = approx.iter().nth(index).expect("five parameters");
            rows.push(ScalingRow {
                parameter,
                l: *l,
                exact: e.exact.expect("exact requested"),
                first_order: e.first_order,
                second_order: e.second_order,
                approx_optimum: a.exact.expect("exact requested"),
            });
        }
    }
    match cfg.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Json => Ok(json(&rows)),
        OutputFormat::Csv => {
            let mut t = Table::new(&[
                "parameter",
                "l",
                "exact",
                "first_order",
                "second_order",
                "approx_optimum",
            ])?;
            for r in &rows {
                t.row([
                    r.parameter.to_owned(),
                    r.l.to_string(),
                    sig12(r.exact),
                    sig12(r.first_order),
                    sig12(r.second_order),
                    sig12(r.approx_optimum),
                ])?;
            }
            t.finish()
        }
    }
}

#[derive(Serialize)]
struct SimulationReport {
    seed: u64,
    n_blocks: u64,
    system: SystemSummary,
    users: usize,
    alpha: f64,
    eps_bar: f64,
    pilot_power: f64,
    data_power: f64,
    analytic_rate: f64,
    mean_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ci_halfwidth_99: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    analytic_in_ci: Option<bool>,
    degenerate_sample: bool,
    sigma_e2: f64,
    empirical_sigma_e2: f64,
    expected_max_hhat2: f64,
    empirical_max_hhat2_mean: f64,
    diagnostics: EstimatorDiagnostics,
}

/// Monte Carlo run of one policy next to its analytic rate.
pub fn simulate(cfg: &RunConfig) -> Result<String> {
    let system = cfg.system(cfg.block_length())?;
    let users = match cfg.users {
        Some(k) => k,
        None => optimizer::optimal_user_count_pruned(&system)?.k_star,
    };
    let policy = match cfg.eps_bar {
        Some(eps) => TrainingPolicy::from_power_fraction(&system, users, 1, eps)?,
        None => optimizer::optimal_policy(&system, users)?,
    };
    let stats = EstimationStats::new(&policy, &system)?;
    let analytic = rate::achievable_rate(&policy, &system)?.value;
    let outcome = sim::simulate_blocks(&policy, &system, cfg.n_blocks(), cfg.seed())?;
    let degenerate = outcome.ci_halfwidth_99.is_none();
    let report = SimulationReport {
        seed: outcome.seed,
        n_blocks: outcome.n_blocks,
        system: (&system).into(),
        users,
        alpha: policy.alpha(),
        eps_bar: policy.eps_bar(),
        pilot_power: policy.pilot_power(),
        data_power: policy.data_power(),
        analytic_rate: analytic,
        mean_rate: outcome.mean_rate,
        ci_halfwidth_99: outcome.ci_halfwidth_99,
        rate_std: outcome.rate_std,
        analytic_in_ci: (!degenerate).then(|| outcome.brackets(analytic)),
        degenerate_sample: degenerate,
        sigma_e2: stats.sigma_e2,
        empirical_sigma_e2: outcome.empirical_sigma_e2,
        expected_max_hhat2: stats.sigma_hhat2 * harmonic(users),
        empirical_max_hhat2_mean: outcome.empirical_max_hhat2_mean,
        diagnostics: outcome.diagnostics,
    };
    if degenerate {
        eprintln!("note: a single block leaves the variance and confidence interval undefined");
    }
    match cfg.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => Ok(json(&report)),
        OutputFormat::Csv => {
            let opt = |v: Option<f64>| v.map(sig12).unwrap_or_default();
            let mut t = Table::new(&[
                "seed",
                "n_blocks",
                "users",
                "alpha",
                "eps_bar",
                "pilot_power",
                "analytic_rate",
                "mean_rate",
                "ci_halfwidth_99",
                "analytic_in_ci",
                "degenerate_sample",
                "sigma_e2",
                "empirical_sigma_e2",
            ])?;
            t.row([
                report.seed.to_string(),
                report.n_blocks.to_string(),
                report.users.to_string(),
                sig12(report.alpha),
                sig12(report.eps_bar),
                sig12(report.pilot_power),
                sig12(report.analytic_rate),
                sig12(report.mean_rate),
                opt(report.ci_halfwidth_99),
                report
                    .analytic_in_ci
                    .map(|b| b.to_string())
                    .unwrap_or_default(),
                report.degenerate_sample.to_string(),
                sig12(report.sigma_e2),
                sig12(report.empirical_sigma_e2),
            ])?;
            t.finish()
        }
    }
}
