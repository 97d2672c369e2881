use super::{golden_section_max, log2_1p, one_minus_exp2_neg, SolverSettings};
use crate::error::{Error, Result};

/// Number of coarse intervals used to seed the search over `r_1`.
const COARSE_SEEDS: usize = 16;
const ORACLE_GOLDEN_ITERATIONS: usize = 200;

/// One instance of the fixed-SNR max-min problem
///
/// ```text
/// max_{0 <= r <= C} min_{T ⊆ K} log2[1 + Σ_{k∉T} ρ_k (1 - 2^{-r_k})] + Σ_{k∈T} (C_k - r_k)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinProblem {
    snrs: Vec<f64>,
    budgets: Vec<f64>,
}

impl MaxMinProblem {
    pub fn new(snrs: Vec<f64>, budgets: Vec<f64>) -> Result<Self> {
        if snrs.len() != budgets.len() {
            return Err(Error::InvalidArgument(format!(
                "{} SNRs but {} budgets",
                snrs.len(),
                budgets.len()
            )));
        }
        if snrs.is_empty() {
            return Err(Error::InvalidArgument("no relays".into()));
        }
        if let Some(bad) = snrs
            .iter()
            .chain(&budgets)
            .find(|v| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidArgument(format!(
                "SNRs and budgets must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(Self { snrs, budgets })
    }

    pub fn two_relay(snrs: [f64; 2], budgets: [f64; 2]) -> Result<Self> {
        Self::new(snrs.to_vec(), budgets.to_vec())
    }

    pub fn snrs(&self) -> &[f64] {
        &self.snrs
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn relay_count(&self) -> usize {
        self.snrs.len()
    }

    fn as_pair(&self) -> Result<([f64; 2], [f64; 2])> {
        match (self.snrs.as_slice(), self.budgets.as_slice()) {
            (&[r1, r2], &[c1, c2]) => Ok(([r1, r2], [c1, c2])),
            _ => Err(Error::InvalidArgument(format!(
                "only the two-relay problem is supported, got {} relays",
                self.relay_count()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinSolution {
    /// Optimal value in bits.
    pub value: f64,
    /// Optimizing `r_k`, one per relay.
    pub r_opt: Vec<f64>,
    /// Golden-section iterations spent on the outer coordinate.
    pub iterations: usize,
}

/// The max-min objective at `r`: the minimum over all relay subsets `T`.
pub fn maxmin_objective(problem: &MaxMinProblem, r: &[f64]) -> f64 {
    let k = problem.relay_count();
    assert_eq!(r.len(), k, "one r_k per relay");
    let mut min = f64::INFINITY;
    for subset in 0u32..(1 << k) {
        let mut received = 0.0;
        let mut spare = 0.0;
        for relay in 0..k {
            if subset & (1 << relay) != 0 {
                spare += problem.budgets[relay] - r[relay];
            } else {
                received += problem.snrs[relay] * one_minus_exp2_neg(r[relay]);
            }
        }
        min = min.min(log2_1p(received) + spare);
    }
    min
}

/// Maximizes the two-relay max-min objective.
///
/// For fixed `r_1` the subset terms split into two increasing and two
/// decreasing functions of `r_2`, so the best `r_2` is the clamped crossing
/// point, available in closed form. The resulting profile over `r_1` is
/// concave; it is seeded on a coarse lattice and refined by golden-section
/// search.
pub fn solve_maxmin(problem: &MaxMinProblem, settings: &SolverSettings) -> Result<MaxMinSolution> {
    let (snrs, budgets) = problem.as_pair()?;
    let (value, r_opt, iterations) = solve_two_relay(snrs, budgets, settings)?;
    Ok(MaxMinSolution {
        value,
        r_opt: r_opt.to_vec(),
        iterations,
    })
}

pub(crate) fn solve_two_relay(
    rho: [f64; 2],
    c: [f64; 2],
    settings: &SolverSettings,
) -> Result<(f64, [f64; 2], usize)> {
    let profile = |r1: f64| {
        let r2 = best_second_rate(rho, c, r1);
        (two_relay_objective(rho, c, r1, r2), r2)
    };

    if rho[0] == 0.0 || c[0] == 0.0 {
        let (value, r2) = profile(0.0);
        return Ok((value, [0.0, r2], 0));
    }

    let spacing = c[0] / COARSE_SEEDS as f64;
    let mut best_index = 0;
    let mut best_value = f64::NEG_INFINITY;
    for i in 0..=COARSE_SEEDS {
        let (value, _) = profile(i as f64 * spacing);
        if value > best_value {
            best_value = value;
            best_index = i;
        }
    }
    let lo = best_index.saturating_sub(1) as f64 * spacing;
    let hi = ((best_index + 1).min(COARSE_SEEDS) as f64 * spacing).min(c[0]);
    let tol = (settings.abs_tol * 1e-3).max(c[0] * 1e-15);
    let (r1, value, iterations) =
        golden_section_max(|r1| profile(r1).0, lo, hi, tol, settings.max_iter)?;

    let (r1, value) = if value > best_value {
        (r1, value)
    } else {
        (best_index as f64 * spacing, best_value)
    };
    let r2 = best_second_rate(rho, c, r1);
    Ok((value.max(0.0), [r1, r2], iterations))
}

fn two_relay_objective(rho: [f64; 2], c: [f64; 2], r1: f64, r2: f64) -> f64 {
    let a1 = rho[0] * one_minus_exp2_neg(r1);
    let a2 = rho[1] * one_minus_exp2_neg(r2);
    let none = log2_1p(a1 + a2);
    let first = log2_1p(a2) + c[0] - r1;
    let second = log2_1p(a1) + c[1] - r2;
    let both = c[0] + c[1] - r1 - r2;
    none.min(first).min(second).min(both)
}

/// Best `r_2` for a fixed `r_1`.
///
/// `T = ∅` and `T = {1}` increase in `r_2`; `T = {2}` and `T = K` decrease.
/// `min(inc) >= min(dec)` holds exactly for `r_2 >= min_d max_i z(i, d)`,
/// where `z(i, d)` is the crossing of one increasing and one decreasing term.
fn best_second_rate(rho: [f64; 2], c: [f64; 2], r1: f64) -> f64 {
    let rho2 = rho[1];
    if rho2 == 0.0 || c[1] == 0.0 {
        return 0.0;
    }
    let a1 = rho[0] * one_minus_exp2_neg(r1);
    let spare1 = c[0] - r1;
    let log_total = log2_1p(a1 + rho2);

    let none_vs_second = c[1] + (1.0 + a1 + rho2 * (-c[1]).exp2()).log2() - log_total;
    let m = c[0] + c[1] - r1;
    let none_vs_both = m + log2_1p(rho2 * (-m).exp2()) - log_total;
    let first_vs_second = log2_sum(1.0 + a1, c[1], rho2, spare1) - log2_1p(rho2) - spare1;
    let first_vs_both = c[1] + log2_1p(rho2 * (-c[1]).exp2()) - log2_1p(rho2);

    let crossing = none_vs_second
        .max(first_vs_second)
        .min(none_vs_both.max(first_vs_both));
    crossing.clamp(0.0, c[1])
}

/// `log2(a·2^p + b·2^q)` for positive `a`, `b` without overflow.
fn log2_sum(a: f64, p: f64, b: f64, q: f64) -> f64 {
    let top = p.max(q);
    top + (a * (p - top).exp2() + b * (q - top).exp2()).log2()
}

/// Lattice maximum of the objective over `[0, C_1] × [0, C_2]`, with
/// `points` values per axis.
pub fn maxmin_lattice_max(problem: &MaxMinProblem, points: usize) -> Result<f64> {
    let (_, budgets) = problem.as_pair()?;
    let (value, _) = scan_lattice(problem, [0.0; 2], budgets, points.max(2));
    Ok(value)
}

/// Derivative-free oracle for [`solve_maxmin`].
///
/// Scans a `grid_points × grid_points` lattice over the whole box, then runs
/// a nested golden-section search (outer over `r_1`, inner over `r_2`) that
/// only evaluates the objective. Both passes return attained values, so the
/// oracle never exceeds the true maximum; the nested pass is exact up to its
/// tolerance because the objective is concave.
pub fn maxmin_grid_oracle(problem: &MaxMinProblem, settings: &SolverSettings) -> Result<f64> {
    let (_, budgets) = problem.as_pair()?;
    let n = settings.grid_points.max(2);
    let (lattice_best, _) = scan_lattice(problem, [0.0; 2], budgets, n);

    let tol = 1e-11;
    let inner = |r1: f64| -> f64 {
        golden_section_max(
            |r2| maxmin_objective(problem, &[r1, r2]),
            0.0,
            budgets[1],
            tol,
            ORACLE_GOLDEN_ITERATIONS,
        )
        .map(|(_, value, _)| value)
        .unwrap_or(f64::NEG_INFINITY)
    };
    let (_, nested_best, _) =
        golden_section_max(inner, 0.0, budgets[0], tol, ORACLE_GOLDEN_ITERATIONS)?;
    Ok(lattice_best.max(nested_best))
}

fn scan_lattice(problem: &MaxMinProblem, lo: [f64; 2], hi: [f64; 2], n: usize) -> (f64, [f64; 2]) {
    let step = [0, 1].map(|k| (hi[k] - lo[k]) / (n - 1) as f64);
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 0..n {
        let r1 = if i + 1 == n { hi[0] } else { lo[0] + i as f64 * step[0] };
        for j in 0..n {
            let r2 = if j + 1 == n { hi[1] } else { lo[1] + j as f64 * step[1] };
            let value = maxmin_objective(problem, &[r1, r2]);
            if value > best.0 {
                best = (value, [r1, r2]);
            }
        }
    }
    best
}
