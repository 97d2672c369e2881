//! Max-min rate for a fixed SNR pair and fixed budgets: the value of the
//! two-relay cloud-RAN style max-min problem, reused by the quantized and
//! truncated channel inversion schemes.

use std::fmt;

use crate::channel::SnrPair;
use crate::error::{Error, Result};
use crate::numerics::{self, log2_1p, one_minus_exp2_neg, SolverSettings};

const TIGHT_TOL: f64 = 1e-6;

/// A subset `T` of the relays in the max-min objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subset {
    Empty,
    First,
    Second,
    Both,
}

impl Subset {
    pub const ALL: [Subset; 4] = [Subset::Empty, Subset::First, Subset::Second, Subset::Both];

    fn contains(self, relay: usize) -> bool {
        matches!(
            (self, relay),
            (Subset::First, 0) | (Subset::Second, 1) | (Subset::Both, _)
        )
    }

    /// The objective term of this subset at `r`.
    pub fn term(self, snrs: SnrPair, budgets: [f64; 2], r: [f64; 2]) -> f64 {
        let rho = snrs.as_array();
        let mut received = 0.0;
        let mut spare = 0.0;
        for k in 0..2 {
            if self.contains(k) {
                spare += budgets[k] - r[k];
            } else {
                received += rho[k] * one_minus_exp2_neg(r[k]);
            }
        }
        log2_1p(received) + spare
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subset::Empty => "{}",
            Subset::First => "{1}",
            Subset::Second => "{2}",
            Subset::Both => "{1,2}",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedRateResult {
    /// Rate in bits per complex dimension.
    pub rate: f64,
    pub r_opt: [f64; 2],
    /// Subsets whose term is within `1e-6` of the rate at `r_opt`.
    pub active_subsets: Vec<Subset>,
}

/// `R(ρ, C)`: the max-min rate for fixed SNRs and budgets.
pub fn fixed_rate(
    snrs: SnrPair,
    budgets: [f64; 2],
    settings: &SolverSettings,
) -> Result<FixedRateResult> {
    if let Some(bad) = budgets.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "budgets must be finite and nonnegative, got {bad}"
        )));
    }
    let (rate, r_opt, _) = numerics::solve_two_relay(snrs.as_array(), budgets, settings)?;
    let active_subsets = Subset::ALL
        .into_iter()
        .filter(|s| s.term(snrs, budgets, r_opt) - rate <= TIGHT_TOL)
        .collect();
    Ok(FixedRateResult {
        rate,
        r_opt,
        active_subsets,
    })
}

/// One-relay rate `log2(1 + ρ) - log2(1 + ρ 2^{-C})`.
pub fn single_relay_rate(snr: f64, budget: f64) -> f64 {
    if snr == 0.0 || budget <= 0.0 {
        return 0.0;
    }
    log2_1p(snr) - log2_1p(snr * (-budget).exp2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{maxmin_grid_oracle, MaxMinProblem};
    use proptest::prelude::*;

    fn rate(rho: [f64; 2], c: [f64; 2]) -> FixedRateResult {
        fixed_rate(
            SnrPair::new(rho[0], rho[1]).unwrap(),
            c,
            &SolverSettings::default(),
        )
        .unwrap()
    }

    #[test]
    fn zero_budgets_give_zero_rate() {
        for rho in [[0.0, 0.0], [3.0, 100.0], [1e6, 1e6]] {
            assert_eq!(rate(rho, [0.0, 0.0]).rate, 0.0);
        }
    }

    #[test]
    fn one_relay_instance() {
        let result = rate([1.0, 0.0], [1.0, 0.0]);
        let expected = (2.0f64 / 1.5).log2();
        assert!((result.rate - expected).abs() < 1e-9);
        assert!((single_relay_rate(1.0, 1.0) - expected).abs() < 1e-15);
        assert_eq!(result.r_opt[1], 0.0);
    }

    #[test]
    fn symmetric_instances_have_symmetric_optimizers() {
        for (rho, c) in [(1.0, 1.0), (10.0, 3.0), (1e4, 10.0), (0.3, 7.0)] {
            let result = rate([rho, rho], [c, c]);
            assert!(
                (result.r_opt[0] - result.r_opt[1]).abs() < 1e-4,
                "rho={rho} c={c}: {:?}",
                result.r_opt
            );
        }
    }

    #[test]
    fn active_subsets_are_tight() {
        let result = rate([20.0, 5.0], [2.0, 3.0]);
        assert!(!result.active_subsets.is_empty());
        let snrs = SnrPair::new(20.0, 5.0).unwrap();
        for s in Subset::ALL {
            let gap = s.term(snrs, [2.0, 3.0], result.r_opt) - result.rate;
            assert!(gap >= -1e-9);
            assert_eq!(gap <= TIGHT_TOL, result.active_subsets.contains(&s));
        }
    }

    #[test]
    fn agrees_with_grid_oracle_on_random_instances() {
        use rand::Rng;
        let mut rng = crate::channel::seeded_rng(2024, 0);
        let settings = SolverSettings {
            grid_points: 120,
            ..SolverSettings::default()
        };
        for _ in 0..100 {
            let rho = [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)];
            let c = [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)];
            let solved = rate(rho, c).rate;
            let problem = MaxMinProblem::two_relay(rho, c).unwrap();
            let oracle = maxmin_grid_oracle(&problem, &settings).unwrap();
            assert!((solved - oracle).abs() < 1e-3, "{rho:?} {c:?}: {solved} vs {oracle}");
            assert!(solved >= oracle - 1e-6);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn relay_exchange_symmetry(
            a in 0.0..1e4f64, b in 0.0..1e4f64, c in 0.0..15.0f64, d in 0.0..15.0f64,
        ) {
            let forward = rate([a, b], [c, d]).rate;
            let backward = rate([b, a], [d, c]).rate;
            prop_assert!((forward - backward).abs() < 1e-8, "{} vs {}", forward, backward);
        }

        #[test]
        fn caps_and_bounds(
            a in 0.0..1e4f64, b in 0.0..1e4f64, c in 0.0..15.0f64, d in 0.0..15.0f64,
        ) {
            let result = rate([a, b], [c, d]);
            let cap = (c + d).min(log2_1p(a + b));
            prop_assert!(result.rate >= 0.0);
            prop_assert!(result.rate <= cap + 1e-8);
            prop_assert!(result.r_opt[0] >= 0.0 && result.r_opt[0] <= c);
            prop_assert!(result.r_opt[1] >= 0.0 && result.r_opt[1] <= d);
        }

        #[test]
        fn monotone_in_every_argument(
            a in 0.0..1e3f64, b in 0.0..1e3f64, c in 0.0..12.0f64, d in 0.0..12.0f64,
            bump in 0.0..3.0f64, which in 0usize..4,
        ) {
            let base = rate([a, b], [c, d]).rate;
            let mut rho = [a, b];
            let mut budgets = [c, d];
            match which {
                0 => rho[0] += bump * (1.0 + a),
                1 => rho[1] += bump * (1.0 + b),
                2 => budgets[0] += bump,
                _ => budgets[1] += bump,
            }
            let bumped = rate(rho, budgets).rate;
            prop_assert!(bumped >= base - 1e-6, "{} -> {}", base, bumped);
        }

        #[test]
        fn second_relay_silent_reduces_to_one_relay(rho in 0.0..1e3f64, c in 0.0..15.0f64) {
            let result = rate([rho, 0.0], [c, 0.0]);
            prop_assert!((result.rate - single_relay_rate(rho, c)).abs() < 1e-5);
        }
    }
}
