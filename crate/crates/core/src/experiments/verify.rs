use std::fmt;

use rand::Rng;

use crate::channel::{complex_gaussian, sample_state, seeded_rng, SnrPair, SystemConfig};
use crate::error::Result;
use crate::fixed_rate::fixed_rate;
use crate::mmse;
use crate::numerics::{
    exp_integral_e1, integrate_semiinfinite, maxmin_grid_oracle, solve_maxmin, MaxMinProblem,
    SolverSettings,
};
use crate::qci;
use crate::tci;
use crate::upper_bound;

/// Random streams used by the suite, kept apart from the Monte Carlo
/// batches of the schemes.
const STREAM_BASE: u64 = 1 << 32;

/// Fault injection for exercising the suite itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerifyHooks {
    /// Perturbs the seed of the second determinism run.
    pub corrupt_seed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5);
        writeln!(f, "{:<width$}  result  detail", "check")?;
        for check in &self.checks {
            let verdict = if check.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{:<width$}  {verdict:<6}  {}", check.name, check.detail)?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

fn outcome(name: &'static str, result: Result<(bool, String)>) -> CheckOutcome {
    match result {
        Ok((passed, detail)) => CheckOutcome {
            name,
            passed,
            detail,
        },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Runs the oracle suites and reports one line per check.
pub fn verify(settings: &SolverSettings, hooks: VerifyHooks) -> VerifyReport {
    let checks = vec![
        outcome("solver vs grid oracle", solver_vs_oracle(settings)),
        outcome("one-relay reduction", one_relay_reduction(settings)),
        outcome("E1 vs quadrature", e1_cross_check(settings)),
        outcome("quantile cells vs Monte Carlo", quantile_cells(settings)),
        outcome("TCI noise vs Monte Carlo", tci_noise(settings)),
        outcome("MMSE power vs Monte Carlo", mmse_power(settings)),
        outcome("water-level residuals", water_level(settings)),
        outcome("QCI feasibility", qci_feasibility(settings)),
        outcome("MMSE calibration", mmse_calibration(settings)),
        outcome("determinism", determinism(settings, hooks)),
    ];
    VerifyReport { checks }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn solver_vs_oracle(settings: &SolverSettings) -> Result<(bool, String)> {
    let mut rng = seeded_rng(settings.seed, STREAM_BASE);
    let mut worst_gap: f64 = 0.0;
    let mut worst_shortfall: f64 = 0.0;
    for _ in 0..100 {
        let rho = [log_uniform(&mut rng, 0.1, 1e4), log_uniform(&mut rng, 0.1, 1e4)];
        let c = [rng.random_range(0.0..15.0), rng.random_range(0.0..15.0)];
        let problem = MaxMinProblem::two_relay(rho, c)?;
        let solved = solve_maxmin(&problem, settings)?.value;
        let oracle = maxmin_grid_oracle(&problem, settings)?;
        worst_gap = worst_gap.max((solved - oracle).abs());
        worst_shortfall = worst_shortfall.max(oracle - solved);
    }
    Ok((
        worst_gap <= 1e-3 && worst_shortfall <= 1e-6,
        format!("100 instances, max |gap| {worst_gap:.2e}, max shortfall {worst_shortfall:.2e}"),
    ))
}

fn one_relay_reduction(settings: &SolverSettings) -> Result<(bool, String)> {
    let mut rng = seeded_rng(settings.seed, STREAM_BASE + 1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let rho = rng.random_range(0.1..1000.0);
        let c = rng.random_range(0.1..15.0);
        let rate = fixed_rate(SnrPair::new(rho, 0.0)?, [c, 0.0], settings)?.rate;
        let expected = ((1.0 + rho) / (1.0 + rho * (-c).exp2())).log2();
        worst = worst.max((rate - expected).abs());
    }
    Ok((worst <= 1e-5, format!("50 pairs, max error {worst:.2e}")))
}

fn e1_cross_check(settings: &SolverSettings) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for x in [0.5, 1.0, 2.0, 5.0, 10.0] {
        let quad = integrate_semiinfinite(|t| (-t).exp() / t, x, settings)?;
        worst = worst.max((exp_integral_e1(x)? - quad).abs());
    }
    Ok((worst <= 1e-8, format!("5 points, max error {worst:.2e}")))
}

fn quantile_cells(settings: &SolverSettings) -> Result<(bool, String)> {
    let draws = settings.mc_samples;
    let mut rng = seeded_rng(settings.seed, STREAM_BASE + 2);
    let xi: Vec<f64> = (0..draws).map(|_| 1.0 / sample_state(&mut rng).gains()[0]).collect();
    let config = SystemConfig::new(1.0, 10.0, 10.0)?;
    let mut worst_z: f64 = 0.0;
    for levels in [2, 4, 8] {
        let grid = qci::build_grid(levels, &config)?;
        let mut counts = vec![0usize; levels];
        for &x in &xi {
            let cell = grid
                .levels
                .iter()
                .position(|l| l.value().is_none_or(|b| x <= b))
                .unwrap_or(levels - 1);
            counts[cell] += 1;
        }
        for (count, p) in counts.iter().zip(&grid.probs) {
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            worst_z = worst_z.max((*count as f64 / draws as f64 - p).abs() / se);
        }
    }
    Ok((worst_z < 3.0, format!("J = 2, 4, 8, max |z| {worst_z:.2}")))
}

fn tci_noise(settings: &SolverSettings) -> Result<(bool, String)> {
    let noise_power = 0.5;
    let config = SystemConfig::new(noise_power, 10.0, 10.0)?;
    let mut rng = seeded_rng(settings.seed, STREAM_BASE + 3);
    let gains: Vec<f64> = (0..settings.mc_samples)
        .map(|_| sample_state(&mut rng).gains()[0])
        .collect();
    let mut worst_z: f64 = 0.0;
    for threshold in [0.5, 1.0, 1.5] {
        let stats = tci::conditional_stats(threshold, &config)?;
        let t = threshold * threshold;
        let samples: Vec<f64> = gains.iter().filter(|&&g| g >= t).map(|g| noise_power / g).collect();
        let (mean, se) = mean_and_se(&samples);
        worst_z = worst_z.max((mean - stats.cond_noise).abs() / se);
    }
    Ok((worst_z < 3.0, format!("S_th = 0.5, 1, 1.5, max |z| {worst_z:.2}")))
}

fn mmse_power(settings: &SolverSettings) -> Result<(bool, String)> {
    let noise_power = 0.5;
    let config = SystemConfig::new(noise_power, 4.0, 4.0)?;
    let calibration = mmse::calibrate(&config, settings)?;
    let mut rng = seeded_rng(settings.seed, STREAM_BASE + 4);
    let samples: Vec<f64> = (0..settings.mc_samples)
        .map(|_| {
            let state = sample_state(&mut rng);
            let x = complex_gaussian(&mut rng);
            let y = state.s1 * x + complex_gaussian(&mut rng) * noise_power.sqrt();
            (state.s1.conj() * y / (state.s1.norm_sqr() + noise_power)).norm_sqr()
        })
        .collect();
    let (mean, se) = mean_and_se(&samples);
    let z = (mean - calibration.est_power[0]).abs() / se;
    Ok((z < 3.0, format!("sigma2 = 0.5, |z| {z:.2}")))
}

fn water_level(settings: &SolverSettings) -> Result<(bool, String)> {
    let mut rng = seeded_rng(settings.seed, STREAM_BASE + 5);
    let mut worst_residual: f64 = 0.0;
    let mut worst_excess = f64::NEG_INFINITY;
    for _ in 0..20 {
        let noise_power = log_uniform(&mut rng, 1e-5, 10.0);
        let total = rng.random_range(0.1..30.0);
        let config = SystemConfig::new(noise_power, total / 2.0, total / 2.0)?;
        let ub = upper_bound::upper_bound(&config, settings)?;
        let spent = upper_bound::budget_at_threshold(ub.nu * noise_power)?;
        worst_residual = worst_residual.max((spent - total).abs());
        worst_excess = worst_excess.max(ub.rate - total);
    }
    Ok((
        worst_residual <= 1e-6 && worst_excess <= 1e-8,
        format!("20 configs, max residual {worst_residual:.2e}, max R - C {worst_excess:.2e}"),
    ))
}

fn qci_feasibility(settings: &SolverSettings) -> Result<(bool, String)> {
    let mut worst_violation = f64::NEG_INFINITY;
    let mut exact_headers = true;
    for (snr_db, c, levels) in [(10.0, 4.0, 4), (40.0, 10.0, 8), (20.0, 3.0, 2), (0.0, 7.0, 8)] {
        let config = SystemConfig::from_snr_db(snr_db, c, c)?;
        let grid = qci::build_grid(levels, &config)?;
        exact_headers &= grid.header_bits == (levels as f64).log2();
        let alloc = qci::optimize_allocation(&grid, &config, settings)?;
        for (k, row) in alloc.c.iter().enumerate() {
            let spent: f64 = row.iter().zip(&grid.probs).map(|(x, p)| x * p).sum();
            worst_violation = worst_violation.max(spent - (config.budgets()[k] - grid.header_bits));
            let negative = row.iter().fold(0.0f64, |m, &x| m.max(-x));
            worst_violation = worst_violation.max(negative).max(row[levels - 1].abs());
        }
    }
    Ok((
        worst_violation <= 1e-9 && exact_headers,
        format!("4 configs, max violation {worst_violation:.2e}, headers exact: {exact_headers}"),
    ))
}

fn mmse_calibration(settings: &SolverSettings) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (noise_power, c1, c2) in [(1.0, 10.0, 10.0), (1e-4, 0.5, 3.0), (0.1, 25.0, 1e-3)] {
        let config = SystemConfig::new(noise_power, c1, c2)?;
        let calibration = mmse::calibrate(&config, settings)?;
        for k in 0..2 {
            let spent = (1.0 + calibration.est_power[k] / calibration.distortion[k]).log2();
            worst = worst.max((spent - config.budgets()[k]).abs());
        }
    }
    Ok((worst <= 1e-9, format!("3 configs, max |log2(1+P/D) - C| {worst:.2e}")))
}

fn determinism(settings: &SolverSettings, hooks: VerifyHooks) -> Result<(bool, String)> {
    let config = SystemConfig::from_snr_db(20.0, 5.0, 5.0)?;
    let first = mmse::mmse_rate(&config, settings)?.rate;
    let mut rerun = *settings;
    if hooks.corrupt_seed {
        rerun.seed = rerun.seed.wrapping_add(1);
    }
    let second = mmse::mmse_rate(&config, &rerun)?.rate;
    Ok((
        first.to_bits() == second.to_bits(),
        format!("MMSE rate twice: {first} and {second}"),
    ))
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
