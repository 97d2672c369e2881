//! Truncated channel inversion.
//!
//! A relay forwards only when `|S_k| >= S_th`, after inverting the channel.
//! The on/off flag costs `H̃ = h(P̃)` bits, and the remaining budget is spent
//! only on active channel uses, giving an effective budget `(C_k - H̃)/P̃`.
//! While active, the inverted noise is replaced by Gaussian noise with the
//! conditional power `σ̃² = E[σ²/|S_k|² | |S_k| >= S_th] = σ² e^t E1(t)`,
//! `t = S_th²`.

use rayon::prelude::*;

use crate::channel::{SnrPair, SystemConfig};
use crate::error::{Error, Result};
use crate::fixed_rate::{fixed_rate, single_relay_rate};
use crate::numerics::{scaled_exp_integral_e1, SolverSettings};

/// Per-relay statistics of the thresholded channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalStats {
    pub threshold: f64,
    /// `P̃ = Pr{|S| >= S_th} = e^{-S_th²}`.
    pub p_active: f64,
    /// Binary entropy of the on/off flag, in bits.
    pub header_bits: f64,
    /// `σ̃²`, the conditional noise power of the inverted channel.
    pub cond_noise: f64,
    /// `ρ̃ = 1/σ̃²`.
    pub cond_snr: f64,
}

impl ConditionalStats {
    /// Bits per active channel use, clamped at zero when the flag alone
    /// exceeds the budget.
    pub fn effective_budget(&self, budget: f64) -> f64 {
        if self.p_active == 0.0 {
            return 0.0;
        }
        ((budget - self.header_bits) / self.p_active).max(0.0)
    }
}

/// Rates of the three cases in which at least one relay is active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRates {
    pub first_only: f64,
    pub second_only: f64,
    pub both: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TciPoint {
    pub relays: [ConditionalStats; 2],
    pub branches: BranchRates,
    /// Lower bound on the bottleneck rate at these thresholds.
    pub rate: f64,
}

impl TciPoint {
    /// Threshold of the first relay; the sweep ties both relays to it.
    pub fn threshold(&self) -> f64 {
        self.relays[0].threshold
    }

    /// Probabilities of (first only, second only, both, neither) active.
    pub fn branch_weights(&self) -> [f64; 4] {
        let p1 = self.relays[0].p_active;
        let p2 = self.relays[1].p_active;
        [p1 * (1.0 - p2), (1.0 - p1) * p2, p1 * p2, (1.0 - p1) * (1.0 - p2)]
    }
}

/// `-p log2 p - (1-p) log2(1-p)` with `0 log 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}

pub fn conditional_stats(threshold: f64, config: &SystemConfig) -> Result<ConditionalStats> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::Domain(format!(
            "threshold must be positive and finite, got {threshold}"
        )));
    }
    let t = threshold * threshold;
    let p_active = (-t).exp();
    let cond_noise = config.noise_power * scaled_exp_integral_e1(t)?;
    Ok(ConditionalStats {
        threshold,
        p_active,
        header_bits: binary_entropy(p_active),
        cond_noise,
        cond_snr: 1.0 / cond_noise,
    })
}

/// Rate with one threshold shared by both relays.
pub fn tci_rate(threshold: f64, config: &SystemConfig, settings: &SolverSettings) -> Result<TciPoint> {
    tci_rate_per_relay([threshold, threshold], config, settings)
}

pub fn tci_rate_per_relay(
    thresholds: [f64; 2],
    config: &SystemConfig,
    settings: &SolverSettings,
) -> Result<TciPoint> {
    let relays = [
        conditional_stats(thresholds[0], config)?,
        conditional_stats(thresholds[1], config)?,
    ];
    let budgets = [
        relays[0].effective_budget(config.c1),
        relays[1].effective_budget(config.c2),
    ];
    let snrs = SnrPair::new(relays[0].cond_snr, relays[1].cond_snr)?;
    let branches = BranchRates {
        first_only: single_relay_rate(snrs.rho1, budgets[0]),
        second_only: single_relay_rate(snrs.rho2, budgets[1]),
        both: fixed_rate(snrs, budgets, settings)?.rate,
    };
    let mut point = TciPoint {
        relays,
        branches,
        rate: 0.0,
    };
    let [w10, w01, w11, _] = point.branch_weights();
    point.rate = w10 * branches.first_only + w01 * branches.second_only + w11 * branches.both;
    Ok(point)
}

/// Thresholds `0.1, 0.2, ..., 2.0`.
pub fn threshold_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 10.0).collect()
}

/// Best shared threshold on [`threshold_grid`]; ties go to the smaller one.
pub fn tci_best(config: &SystemConfig, settings: &SolverSettings) -> Result<TciPoint> {
    let points = threshold_grid()
        .into_par_iter()
        .map(|t| tci_rate(t, config, settings))
        .collect::<Result<Vec<_>>>()?;
    let best = points
        .into_iter()
        .reduce(|best, p| if p.rate > best.rate { p } else { best })
        .expect("threshold grid is not empty");
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_state, seeded_rng};
    use crate::numerics::{maxmin_grid_oracle, MaxMinProblem};

    fn config(noise_power: f64, c: f64) -> SystemConfig {
        SystemConfig::new(noise_power, c, c).unwrap()
    }

    #[test]
    fn conditional_stats_examples() {
        let unit = config(1.0, 10.0);
        let stats = conditional_stats(1.0, &unit).unwrap();
        assert!((stats.cond_noise - 0.596_347_362_3).abs() < 1e-9);
        assert!((stats.cond_noise * stats.cond_snr - 1.0).abs() < 1e-12);
        assert!((stats.p_active - (-1.0f64).exp()).abs() < 1e-12);

        let half = conditional_stats(std::f64::consts::LN_2.sqrt(), &unit).unwrap();
        assert!((half.p_active - 0.5).abs() < 1e-12);
        assert!((half.header_bits - 1.0).abs() < 1e-12);

        let two = conditional_stats(2.0, &unit).unwrap();
        assert!((two.p_active - 0.018_315_639).abs() < 1e-9);

        assert!(conditional_stats(0.0, &unit).is_err());
    }

    #[test]
    fn binary_entropy_edges() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn conditional_noise_matches_monte_carlo() {
        let noise_power = 0.5;
        let unit = config(noise_power, 10.0);
        let mut rng = seeded_rng(17, 0);
        let gains: Vec<f64> = (0..1_000_000).map(|_| sample_state(&mut rng).gains()[0]).collect();
        for &threshold in &[0.3, 1.0, 1.5] {
            let stats = conditional_stats(threshold, &unit).unwrap();
            let t = threshold * threshold;
            let active: Vec<f64> = gains
                .iter()
                .filter(|&&g| g >= t)
                .map(|g| noise_power / g)
                .collect();
            let n = active.len() as f64;
            let mean = active.iter().sum::<f64>() / n;
            let var = active.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            assert!((mean - stats.cond_noise).abs() < 3.0 * se, "S_th={threshold}");
            let p_se = (stats.p_active * (1.0 - stats.p_active) / 1e6).sqrt();
            assert!((n / 1e6 - stats.p_active).abs() < 3.0 * p_se);
        }
    }

    #[test]
    fn header_sized_budget_gives_zero_rate() {
        let stats = conditional_stats(1.0, &config(1.0, 1.0)).unwrap();
        let exact = config(1.0, stats.header_bits);
        let point = tci_rate(1.0, &exact, &SolverSettings::default()).unwrap();
        assert_eq!(point.rate, 0.0);
        let short = config(1.0, 0.5 * stats.header_bits);
        assert_eq!(tci_rate(1.0, &short, &SolverSettings::default()).unwrap().rate, 0.0);
    }

    #[test]
    fn symmetric_branches_agree() {
        let point = tci_rate(0.7, &config(0.01, 6.0), &SolverSettings::default()).unwrap();
        assert!((point.branches.first_only - point.branches.second_only).abs() < 1e-9);
        let total: f64 = point.branch_weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_composes_from_independent_branch_values() {
        let cfg = config(1.0, 10.0);
        let point = tci_rate(1.0, &cfg, &SolverSettings::default()).unwrap();

        let p = (-1.0f64).exp();
        let h = -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
        let rho = 1.0 / (1.0f64.exp() * 0.219_383_934_395_520_3);
        let budget = (10.0 - h) / p;
        let single = (1.0 + rho).log2() - (1.0 + rho * 2f64.powf(-budget)).log2();
        let problem = MaxMinProblem::two_relay([rho, rho], [budget, budget]).unwrap();
        let both = maxmin_grid_oracle(&problem, &SolverSettings::default()).unwrap();
        let expected = 2.0 * p * (1.0 - p) * single + p * p * both;

        assert!((point.branches.first_only - single).abs() < 1e-9);
        assert!((point.branches.both - both).abs() < 1e-6);
        assert!((point.rate - expected).abs() < 1e-6, "{} vs {expected}", point.rate);
    }

    #[test]
    fn best_threshold_is_the_grid_maximum() {
        let cfg = config(0.1, 4.0);
        let settings = SolverSettings::default();
        let best = tci_best(&cfg, &settings).unwrap();
        let rates: Vec<f64> = threshold_grid()
            .into_iter()
            .map(|t| tci_rate(t, &cfg, &settings).unwrap().rate)
            .collect();
        let max = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best.rate, max);
        let first = rates.iter().position(|&r| r == max).unwrap();
        assert!((best.threshold() - threshold_grid()[first]).abs() < 1e-15);
    }

    #[test]
    fn vanishing_budget_gives_vanishing_rate() {
        let best = tci_best(&config(1e-4, 1e-6), &SolverSettings::default()).unwrap();
        assert!(best.rate.abs() < 1e-9);
    }

    #[test]
    fn high_snr_rate_stays_below_the_upper_bound() {
        let cfg = config(1e-6, 10.0);
        let settings = SolverSettings::default();
        let best = tci_best(&cfg, &settings).unwrap();
        eprintln!("{:.12} at {}", best.rate, best.threshold());
        let ub = crate::upper_bound::upper_bound(&cfg, &settings).unwrap().rate;
        assert!(best.rate > 17.5 && best.rate < ub, "{} vs {ub}", best.rate);
    }
}
