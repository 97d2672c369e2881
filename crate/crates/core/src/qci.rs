//! Quantized channel inversion.
//!
//! Each relay inverts its channel and adds artificial noise so that the
//! inverse gain `ξ = |S|^{-2}` is rounded up to one of `J` levels
//! `b_1 < … < b_{J-1} < b_J = ∞`. The level index costs `Ĥ` header bits and
//! the remaining budget is split across levels by the allocation `c_{k,j}`.
//!
//! Indices are zero-based: level `J - 1` is the infinite one, whose SNR is
//! exactly zero and whose allocation is pinned to zero.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::channel::{xi_quantile, SnrPair, SystemConfig};
use crate::error::{Error, Result};
use crate::fixed_rate::{fixed_rate, single_relay_rate};
use crate::numerics::{SolverSettings, LN_2};

/// A quantization point for `ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Level {
    Finite(f64),
    Infinite,
}

impl Level {
    pub fn value(self) -> Option<f64> {
        match self {
            Level::Finite(b) => Some(b),
            Level::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationGrid {
    pub levels: Vec<Level>,
    /// Cell probabilities `P̂_j`.
    pub probs: Vec<f64>,
    /// `ρ̂_j = 1/(b_j σ²)`, with the last entry exactly zero.
    pub snr_levels: Vec<f64>,
    /// Entropy of the level index, in bits.
    pub header_bits: f64,
    /// Set when the header alone exceeds the smaller link budget.
    pub infeasible: bool,
}

impl QuantizationGrid {
    /// Number of levels `J`.
    pub fn size(&self) -> usize {
        self.levels.len()
    }

    fn last(&self) -> usize {
        self.levels.len() - 1
    }
}

/// Grid with the levels at the `j/J` quantiles of `ξ`, so every cell has
/// probability `1/J`.
pub fn build_grid(levels: usize, config: &SystemConfig) -> Result<QuantizationGrid> {
    if levels < 2 {
        return Err(Error::InvalidArgument(format!(
            "a quantization grid needs at least two levels, got {levels}"
        )));
    }
    let count = levels as f64;
    let mut points = Vec::with_capacity(levels);
    let mut snr_levels = Vec::with_capacity(levels);
    for j in 1..levels {
        let b = xi_quantile(j as f64 / count)?;
        points.push(Level::Finite(b));
        snr_levels.push(1.0 / (b * config.noise_power));
    }
    points.push(Level::Infinite);
    snr_levels.push(0.0);
    let probs = vec![1.0 / count; levels];
    let header_bits = probs.iter().map(|p| -p * p.log2()).sum::<f64>();
    Ok(QuantizationGrid {
        levels: points,
        probs,
        snr_levels,
        infeasible: header_bits > config.c1.min(config.c2),
        header_bits,
    })
}

/// `R_{j1,j2}` for the allocation rows `c1`, `c2` (one entry per level).
pub fn cell_rate(
    j1: usize,
    j2: usize,
    grid: &QuantizationGrid,
    c1: &[f64],
    c2: &[f64],
    settings: &SolverSettings,
) -> Result<f64> {
    let size = grid.size();
    if j1 >= size || j2 >= size {
        return Err(Error::InvalidArgument(format!(
            "cell ({j1}, {j2}) is outside a grid of {size} levels"
        )));
    }
    for row in [c1, c2] {
        if row.len() != size {
            return Err(Error::InvalidArgument(format!(
                "allocation rows need {size} entries, got {}",
                row.len()
            )));
        }
        if let Some(bad) = row.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "allocations must be finite and nonnegative, got {bad}"
            )));
        }
    }
    let last = grid.last();
    let (rho1, rho2) = (grid.snr_levels[j1], grid.snr_levels[j2]);
    Ok(match (j1 == last, j2 == last) {
        (true, true) => 0.0,
        (true, false) => single_relay_rate(rho2, c2[j2]),
        (false, true) => single_relay_rate(rho1, c1[j1]),
        (false, false) => fixed_rate(SnrPair::new(rho1, rho2)?, [c1[j1], c2[j2]], settings)?.rate,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QciAllocation {
    /// `c[k][j]`, bits spent by relay `k` on level `j`.
    pub c: [Vec<f64>; 2],
    /// `rates[j1][j2] = R_{j1,j2}`.
    pub rates: Vec<Vec<f64>>,
    pub lower_bound: f64,
    pub diagnostic: Option<String>,
}

/// Expected rate `Σ P̂_{j1} P̂_{j2} R_{j1,j2}` of an allocation.
pub fn allocation_rate(
    grid: &QuantizationGrid,
    c: &[Vec<f64>; 2],
    settings: &SolverSettings,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let size = grid.size();
    let rates = (0..size)
        .into_par_iter()
        .map(|j1| {
            (0..size)
                .map(|j2| cell_rate(j1, j2, grid, &c[0], &c[1], settings))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for (j1, row) in rates.iter().enumerate() {
        for (j2, rate) in row.iter().enumerate() {
            total += grid.probs[j1] * grid.probs[j2] * rate;
        }
    }
    Ok((total, rates))
}

/// Maximizes the expected rate over allocations with
/// `Σ_j P̂_j c_{k,j} <= C_k - Ĥ`, `c >= 0` and `c_{k,J} = 0`.
///
/// The problem is solved in its epigraph form, with one `(r_1, r_2, β)`
/// triple per finite cell, by a log-barrier interior-point method. The
/// iterate stays strictly feasible and the barrier parameter is raised until
/// the duality gap on the expected rate is below `abs_tol`.
pub fn optimize_allocation(
    grid: &QuantizationGrid,
    config: &SystemConfig,
    settings: &SolverSettings,
) -> Result<QciAllocation> {
    settings.validate()?;
    let size = grid.size();
    let header = grid.header_bits;
    let budgets = config.budgets();
    if let Some(k) = budgets.iter().position(|&c| c < header) {
        return Ok(QciAllocation {
            c: [vec![0.0; size], vec![0.0; size]],
            rates: vec![vec![0.0; size]; size],
            lower_bound: 0.0,
            diagnostic: Some(format!(
                "relay {} budget {} is below the {header} bit header",
                k + 1,
                budgets[k]
            )),
        });
    }
    // Σ_j c_{k,j}/J <= C_k - Ĥ, written for uniform cells.
    let spend = budgets.map(|c| (c - header) / grid.probs[0]);
    let program = Program::new(grid, spend);
    let c = match program {
        Some(program) => program.solve(settings)?,
        None => [vec![0.0; size], vec![0.0; size]],
    };
    let (lower_bound, rates) = allocation_rate(grid, &c, settings)?;
    Ok(QciAllocation {
        c,
        rates,
        lower_bound,
        diagnostic: None,
    })
}

/// Budgets this small are treated as empty.
const EMPTY_BUDGET: f64 = 1e-12;
const BARRIER_GROWTH: f64 = 10.0;
const NEWTON_TOL: f64 = 1e-10;
const ARMIJO: f64 = 0.01;
const MIN_STEP: f64 = 1e-16;
const ROUNDING: f64 = 1e-13;

/// Constraint value with its gradient in the local variables
/// `(c1, c2, r1, r2, β)` and its Hessian in `(r1, r2)`.
struct Constraint {
    value: f64,
    grad: [f64; 5],
    hess: [[f64; 2]; 2],
}

impl Constraint {
    fn linear(value: f64, grad: [f64; 5]) -> Self {
        Constraint {
            value,
            grad,
            hess: [[0.0; 2]; 2],
        }
    }
}

/// `log2(1 + Σ_k ρ_k (1 - 2^{-r_k}))` over the relays in `used`, with its
/// derivatives in `r`.
fn log_term(rho: [f64; 2], r: [f64; 2], used: [bool; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let mut s = 1.0;
    let mut d = [0.0; 2];
    for k in 0..2 {
        if used[k] {
            let decay = (-r[k]).exp2();
            s += rho[k] * (1.0 - decay);
            d[k] = rho[k] * LN_2 * decay;
        }
    }
    let grad = [d[0] / (s * LN_2), d[1] / (s * LN_2)];
    let mut hess = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let own = if a == b { -LN_2 * d[a] * s } else { 0.0 };
            hess[a][b] = (own - d[a] * d[b]) / (s * s * LN_2);
        }
    }
    (s.ln() / LN_2, grad, hess)
}

/// One-sided rate `log2(1+ρ) - log2(1+ρ 2^{-c})` with two derivatives in `c`.
fn edge_rate(rho: f64, c: f64) -> (f64, f64, f64) {
    let q = rho * (-c).exp2();
    let value = single_relay_rate(rho, c);
    (value, q / (1.0 + q), -LN_2 * q / ((1.0 + q) * (1.0 + q)))
}

/// The epigraph program over the finite cells.
struct Program {
    cells: usize,
    rho: [Vec<f64>; 2],
    spend: [f64; 2],
    active: [bool; 2],
    per_cell: usize,
    offset_cells: usize,
    vars: usize,
    constraints: usize,
}

impl Program {
    fn new(grid: &QuantizationGrid, spend: [f64; 2]) -> Option<Self> {
        let cells = grid.last();
        let active = spend.map(|s| s > EMPTY_BUDGET);
        if !active[0] && !active[1] {
            return None;
        }
        let nactive = active.iter().filter(|&&a| a).count();
        let per_cell = 1 + nactive;
        let offset_cells = nactive * cells;
        let rho = grid.snr_levels[..cells].to_vec();
        Some(Program {
            cells,
            rho: [rho.clone(), rho],
            spend,
            active,
            per_cell,
            offset_cells,
            vars: offset_cells + per_cell * cells * cells,
            constraints: (4 + 2 * nactive) * cells * cells + nactive,
        })
    }

    fn c_index(&self, k: usize, i: usize) -> Option<usize> {
        if !self.active[k] {
            return None;
        }
        let before = if k == 1 && self.active[0] { self.cells } else { 0 };
        Some(before + i)
    }

    /// Global indices of `(c1, c2, r1, r2, β)` for cell `(i, j)`.
    fn cell_indices(&self, i: usize, j: usize) -> [Option<usize>; 5] {
        let base = self.offset_cells + self.per_cell * (i * self.cells + j);
        let r1 = self.active[0].then_some(base);
        let r2 = self.active[1].then_some(base + self.active[0] as usize);
        let beta = base + self.per_cell - 1;
        [self.c_index(0, i), self.c_index(1, j), r1, r2, Some(beta)]
    }

    fn local(&self, x: &[f64], idx: &[Option<usize>; 5]) -> [f64; 5] {
        idx.map(|i| i.map_or(0.0, |i| x[i]))
    }

    fn cell_constraints(&self, i: usize, j: usize, v: [f64; 5], out: &mut Vec<Constraint>) {
        out.clear();
        let rho = [self.rho[0][i], self.rho[1][j]];
        let r = [v[2], v[3]];
        let [c1, c2, r1, r2, beta] = v;

        let (both, g, h) = log_term(rho, r, [true, true]);
        out.push(Constraint {
            value: both - beta,
            grad: [0.0, 0.0, g[0], g[1], -1.0],
            hess: h,
        });
        let (second, g, h) = log_term(rho, r, [false, true]);
        out.push(Constraint {
            value: second + c1 - r1 - beta,
            grad: [1.0, 0.0, -1.0, g[1], -1.0],
            hess: h,
        });
        let (first, g, h) = log_term(rho, r, [true, false]);
        out.push(Constraint {
            value: first + c2 - r2 - beta,
            grad: [0.0, 1.0, g[0], -1.0, -1.0],
            hess: h,
        });
        out.push(Constraint::linear(
            c1 + c2 - r1 - r2 - beta,
            [1.0, 1.0, -1.0, -1.0, -1.0],
        ));
        if self.active[0] {
            out.push(Constraint::linear(r1, [0.0, 0.0, 1.0, 0.0, 0.0]));
            out.push(Constraint::linear(c1 - r1, [1.0, 0.0, -1.0, 0.0, 0.0]));
        }
        if self.active[1] {
            out.push(Constraint::linear(r2, [0.0, 0.0, 0.0, 1.0, 0.0]));
            out.push(Constraint::linear(c2 - r2, [0.0, 1.0, 0.0, -1.0, 0.0]));
        }
    }

    /// `Σ β + Σ one-sided rates`, i.e. `J²` times the epigraph objective.
    fn objective(&self, x: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.cells {
            for j in 0..self.cells {
                total += x[self.cell_indices(i, j)[4].unwrap()];
            }
        }
        for k in 0..2 {
            for i in 0..self.cells {
                if let Some(ci) = self.c_index(k, i) {
                    total += single_relay_rate(self.rho[k][i], x[ci]);
                }
            }
        }
        total
    }

    fn budget_slack(&self, x: &[f64], k: usize) -> f64 {
        let used: f64 = (0..self.cells).filter_map(|i| self.c_index(k, i)).map(|ci| x[ci]).sum();
        self.spend[k] - used
    }

    /// `-t·objective - Σ ln h`, or `None` outside the interior.
    fn barrier(&self, x: &[f64], t: f64, scratch: &mut Vec<Constraint>) -> Option<f64> {
        let mut value = -t * self.objective(x);
        for k in 0..2 {
            if self.active[k] {
                let slack = self.budget_slack(x, k);
                if !(slack > 0.0) {
                    return None;
                }
                value -= slack.ln();
            }
        }
        for i in 0..self.cells {
            for j in 0..self.cells {
                let idx = self.cell_indices(i, j);
                self.cell_constraints(i, j, self.local(x, &idx), scratch);
                for con in scratch.iter() {
                    if !(con.value > 0.0) {
                        return None;
                    }
                    value -= con.value.ln();
                }
            }
        }
        value.is_finite().then_some(value)
    }

    fn derivatives(&self, x: &[f64], t: f64, scratch: &mut Vec<Constraint>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.vars;
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for k in 0..2 {
            if !self.active[k] {
                continue;
            }
            let w = 1.0 / self.budget_slack(x, k);
            for i in 0..self.cells {
                let ci = self.c_index(k, i).unwrap();
                let (_, d1, d2) = edge_rate(self.rho[k][i], x[ci]);
                grad[ci] += -t * d1 + w;
                hess[(ci, ci)] -= t * d2;
                for i2 in 0..self.cells {
                    hess[(ci, self.c_index(k, i2).unwrap())] += w * w;
                }
            }
        }
        for i in 0..self.cells {
            for j in 0..self.cells {
                let idx = self.cell_indices(i, j);
                grad[idx[4].unwrap()] -= t;
                self.cell_constraints(i, j, self.local(x, &idx), scratch);
                for con in scratch.iter() {
                    let w = 1.0 / con.value;
                    for a in 0..5 {
                        let Some(ia) = idx[a] else { continue };
                        if con.grad[a] == 0.0 {
                            continue;
                        }
                        grad[ia] -= w * con.grad[a];
                        for b in 0..5 {
                            if let Some(ib) = idx[b] {
                                hess[(ia, ib)] += w * w * con.grad[a] * con.grad[b];
                            }
                        }
                    }
                    for a in 0..2 {
                        for b in 0..2 {
                            if let (Some(ia), Some(ib)) = (idx[2 + a], idx[2 + b]) {
                                hess[(ia, ib)] -= w * con.hess[a][b];
                            }
                        }
                    }
                }
            }
        }
        (grad, hess)
    }

    /// Strictly feasible start: each relay spends part of its budget evenly
    /// and every cell uses half of it.
    fn start(&self, scratch: &mut Vec<Constraint>) -> Vec<f64> {
        let mut x = vec![0.0; self.vars];
        for k in 0..2 {
            for i in 0..self.cells {
                if let Some(ci) = self.c_index(k, i) {
                    x[ci] = self.spend[k] / (self.cells + 1) as f64;
                }
            }
        }
        for i in 0..self.cells {
            for j in 0..self.cells {
                let idx = self.cell_indices(i, j);
                for k in 0..2 {
                    if let (Some(ri), Some(ci)) = (idx[2 + k], idx[k]) {
                        x[ri] = 0.5 * x[ci];
                    }
                }
                let beta = idx[4].unwrap();
                x[beta] = 0.0;
                self.cell_constraints(i, j, self.local(&x, &idx), scratch);
                let floor = scratch.iter().take(4).map(|c| c.value).fold(f64::INFINITY, f64::min);
                x[beta] = floor - 1.0;
            }
        }
        x
    }

    fn newton_direction(grad: &DVector<f64>, hess: DMatrix<f64>) -> Option<DVector<f64>> {
        let scale = hess.diagonal().amax().max(1.0);
        let mut jitter = 0.0;
        for _ in 0..12 {
            let mut h = hess.clone();
            if jitter > 0.0 {
                for d in 0..h.nrows() {
                    h[(d, d)] += jitter;
                }
            }
            if let Some(chol) = h.cholesky() {
                return Some(-chol.solve(grad));
            }
            jitter = if jitter == 0.0 { scale * 1e-14 } else { jitter * 100.0 };
        }
        None
    }

    fn solve(&self, settings: &SolverSettings) -> Result<[Vec<f64>; 2]> {
        let mut scratch = Vec::with_capacity(8);
        let mut x = self.start(&mut scratch);
        let cells = (self.cells + 1) as f64;
        // The rate is the epigraph objective divided by J².
        let gap_target = settings.abs_tol * cells * cells;
        let mut t = 1.0;
        loop {
            let mut steps = 0;
            loop {
                let (grad, hess) = self.derivatives(&x, t, &mut scratch);
                let Some(dir) = Self::newton_direction(&grad, hess) else {
                    break;
                };
                let decrement = -grad.dot(&dir);
                let current = self
                    .barrier(&x, t, &mut scratch)
                    .expect("iterate stays interior");
                // Below this the decrease is lost to rounding in the barrier value.
                if decrement / 2.0 <= NEWTON_TOL + ROUNDING * current.abs() {
                    break;
                }
                steps += 1;
                if steps > settings.max_iter {
                    return Err(Error::NonConvergent {
                        what: "quantized allocation centering",
                        iterations: steps,
                    });
                }
                let mut step = 1.0;
                let mut next = x.clone();
                let accepted = loop {
                    for (n, (xi, di)) in next.iter_mut().zip(x.iter().zip(dir.iter())) {
                        *n = xi + step * di;
                    }
                    if let Some(value) = self.barrier(&next, t, &mut scratch) {
                        if value <= current - ARMIJO * step * decrement {
                            break true;
                        }
                    }
                    step *= 0.5;
                    if step < MIN_STEP {
                        break false;
                    }
                };
                if !accepted {
                    break;
                }
                x = next;
            }
            if self.constraints as f64 / t <= gap_target {
                break;
            }
            t *= BARRIER_GROWTH;
        }
        let size = self.cells + 1;
        let mut c = [vec![0.0; size], vec![0.0; size]];
        for (k, row) in c.iter_mut().enumerate() {
            for (i, entry) in row.iter_mut().take(self.cells).enumerate() {
                if let Some(ci) = self.c_index(k, i) {
                    *entry = x[ci];
                }
            }
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_state, seeded_rng};

    fn config(noise_power: f64, c: f64) -> SystemConfig {
        SystemConfig::new(noise_power, c, c).unwrap()
    }

    #[test]
    fn grid_examples() {
        let grid = build_grid(4, &config(1.0, 10.0)).unwrap();
        let expected = [0.721_347_520_4, 1.442_695_040_9, 3.476_059_497_6];
        for (level, b) in grid.levels.iter().zip(expected) {
            assert!((level.value().unwrap() - b).abs() < 1e-9);
        }
        assert_eq!(grid.levels[3], Level::Infinite);
        let snr = [1.386_294_361_1, 0.693_147_180_6, 0.287_682_072_5, 0.0];
        for (got, want) in grid.snr_levels.iter().zip(snr) {
            assert!((got - want).abs() < 1e-9);
        }
        assert_eq!(grid.snr_levels[3], 0.0);
        assert_eq!(grid.header_bits, 2.0);
        assert_eq!(build_grid(2, &config(1.0, 1.0)).unwrap().header_bits, 1.0);
        assert_eq!(build_grid(8, &config(1.0, 10.0)).unwrap().header_bits, 3.0);
        assert!(build_grid(1, &config(1.0, 1.0)).is_err());
        assert!(build_grid(8, &config(1.0, 2.5)).unwrap().infeasible);
    }

    #[test]
    fn grid_invariants() {
        for levels in [2, 3, 5, 8, 16] {
            let grid = build_grid(levels, &config(0.3, 10.0)).unwrap();
            assert!((grid.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(grid.snr_levels.windows(2).all(|w| w[0] > w[1]));
            let entropy: f64 = grid.probs.iter().map(|p| -p * p.log2()).sum();
            assert!((grid.header_bits - entropy).abs() < 1e-12);
        }
    }

    #[test]
    fn cell_frequencies_match_monte_carlo() {
        let draws = 1_000_000;
        let mut rng = seeded_rng(5, 3);
        let xi: Vec<f64> = (0..draws).map(|_| 1.0 / sample_state(&mut rng).gains()[0]).collect();
        for levels in [2, 4, 8] {
            let grid = build_grid(levels, &config(1.0, 10.0)).unwrap();
            let mut counts = vec![0usize; levels];
            for &x in &xi {
                let cell = grid
                    .levels
                    .iter()
                    .position(|l| l.value().is_none_or(|b| x <= b))
                    .unwrap();
                counts[cell] += 1;
            }
            for (count, p) in counts.iter().zip(&grid.probs) {
                let se = (p * (1.0 - p) / draws as f64).sqrt();
                assert!((*count as f64 / draws as f64 - p).abs() < 3.0 * se);
            }
        }
    }

    #[test]
    fn cell_rate_examples() {
        let settings = SolverSettings::default();
        let mut grid = build_grid(4, &config(1.0, 10.0)).unwrap();
        let zeros = vec![0.0; 4];
        assert_eq!(cell_rate(3, 3, &grid, &zeros, &zeros, &settings).unwrap(), 0.0);
        assert_eq!(cell_rate(0, 1, &grid, &zeros, &zeros, &settings).unwrap(), 0.0);

        grid.snr_levels[1] = 1.0;
        let c2 = vec![0.0, 1.0, 0.0, 0.0];
        let rate = cell_rate(3, 1, &grid, &zeros, &c2, &settings).unwrap();
        assert!((rate - (2f64.log2() - 1.5f64.log2())).abs() < 1e-12);
        assert!((rate - 0.415_037_499_3).abs() < 1e-9);

        assert!(cell_rate(4, 0, &grid, &zeros, &zeros, &settings).is_err());
        assert!(cell_rate(0, 0, &grid, &[0.0; 3], &zeros, &settings).is_err());
    }

    fn assert_feasible(alloc: &QciAllocation, grid: &QuantizationGrid, cfg: &SystemConfig) {
        for (k, row) in alloc.c.iter().enumerate() {
            assert_eq!(row[grid.size() - 1], 0.0);
            assert!(row.iter().all(|&c| c >= 0.0));
            let spent: f64 = row.iter().zip(&grid.probs).map(|(c, p)| c * p).sum();
            assert!(spent <= cfg.budgets()[k] - grid.header_bits + 1e-9);
        }
    }

    #[test]
    fn two_levels_spend_the_full_budget() {
        let cfg = config(0.01, 4.0);
        let settings = SolverSettings::default();
        let grid = build_grid(2, &cfg).unwrap();
        let alloc = optimize_allocation(&grid, &cfg, &settings).unwrap();
        assert_feasible(&alloc, &grid, &cfg);
        let full = [vec![6.0, 0.0], vec![6.0, 0.0]];
        let (best, _) = allocation_rate(&grid, &full, &settings).unwrap();
        assert!((alloc.lower_bound - best).abs() < 1e-8, "{} vs {best}", alloc.lower_bound);
    }

    #[test]
    fn header_sized_budget_gives_zero() {
        let cfg = config(0.01, 2.0);
        let grid = build_grid(4, &cfg).unwrap();
        let alloc = optimize_allocation(&grid, &cfg, &SolverSettings::default()).unwrap();
        assert_eq!(alloc.lower_bound, 0.0);
        assert!(alloc.c.iter().flatten().all(|&c| c == 0.0));

        let short = config(0.01, 1.5);
        let alloc = optimize_allocation(&grid, &short, &SolverSettings::default()).unwrap();
        assert_eq!(alloc.lower_bound, 0.0);
        assert!(alloc.diagnostic.is_some());
    }

    #[test]
    fn beats_uniform_allocations_and_is_symmetric() {
        let settings = SolverSettings::default();
        for (noise_power, c, levels) in [(1.0, 3.0, 4), (0.01, 6.0, 4), (1e-4, 10.0, 8), (0.1, 4.0, 8)] {
            let cfg = config(noise_power, c);
            let grid = build_grid(levels, &cfg).unwrap();
            let alloc = optimize_allocation(&grid, &cfg, &settings).unwrap();
            assert_feasible(&alloc, &grid, &cfg);
            let residual = c - grid.header_bits;
            let j = levels as f64;
            for per_level in [residual / (j - 1.0), residual * j / (j - 1.0)] {
                let mut row = vec![per_level; levels];
                row[levels - 1] = 0.0;
                let (uniform, _) = allocation_rate(&grid, &[row.clone(), row], &settings).unwrap();
                assert!(alloc.lower_bound >= uniform - 1e-9, "{} < {uniform}", alloc.lower_bound);
            }
            for (a, b) in alloc.c[0].iter().zip(&alloc.c[1]) {
                assert!((a - b).abs() < 1e-3, "{:?}", alloc.c);
            }
        }
    }

    #[test]
    fn no_pairwise_transfer_improves_the_optimum() {
        let settings = SolverSettings::default();
        for (cfg, levels) in [
            (SystemConfig::new(0.02, 5.0, 3.5).unwrap(), 4),
            (SystemConfig::from_snr_db(40.0, 10.0, 10.0).unwrap(), 8),
        ] {
            check_pairwise(&cfg, levels, &settings);
        }
    }

    fn check_pairwise(cfg: &SystemConfig, levels: usize, settings: &SolverSettings) {
        let grid = build_grid(levels, cfg).unwrap();
        let alloc = optimize_allocation(&grid, cfg, settings).unwrap();
        for k in 0..2 {
            for from in 0..levels - 1 {
                for to in 0..levels - 1 {
                    if from == to {
                        continue;
                    }
                    for delta in [1e-3f64, 1e-2, 0.1] {
                        let mut c = alloc.c.clone();
                        let moved = delta.min(c[k][from]);
                        c[k][from] -= moved;
                        c[k][to] += moved;
                        let (rate, _) = allocation_rate(&grid, &c, settings).unwrap();
                        assert!(rate <= alloc.lower_bound + 1e-8, "{rate} > {}", alloc.lower_bound);
                    }
                }
            }
        }
    }

    #[test]
    fn budget_ladder_is_monotone_and_below_the_upper_bound() {
        let settings = SolverSettings::default();
        for levels in [2, 4, 8] {
            let mut previous = 0.0;
            for c in 0..=25 {
                let cfg = SystemConfig::from_snr_db(40.0, c as f64, c as f64).unwrap();
                let grid = build_grid(levels, &cfg).unwrap();
                let rate = optimize_allocation(&grid, &cfg, &settings).unwrap().lower_bound;
                let ub = crate::upper_bound::upper_bound(&cfg, &settings).unwrap().rate;
                assert!(rate >= previous - 1e-6, "J={levels} C={c}: {rate} < {previous}");
                assert!(rate <= ub + 1e-6, "J={levels} C={c}: {rate} > {ub}");
                previous = rate;
            }
        }
    }

    #[test]
    fn three_bit_grid_is_close_to_the_upper_bound() {
        let settings = SolverSettings::default();
        let cfg = SystemConfig::from_snr_db(40.0, 10.0, 10.0).unwrap();
        let grid = build_grid(8, &cfg).unwrap();
        let rate = optimize_allocation(&grid, &cfg, &settings).unwrap().lower_bound;
        let ub = crate::upper_bound::upper_bound(&cfg, &settings).unwrap().rate;
        assert!(rate >= 0.85 * ub && rate <= ub, "{rate} vs {ub}");
    }
}
