//! Shared numerical kernels: semi-infinite quadrature, the exponential
//! integral, bracketing root finders, and the two-relay max-min solver
//! together with its exhaustive lattice oracle.

mod maxmin;
mod quadrature;
mod roots;
mod special;

pub use maxmin::{
    maxmin_grid_oracle, maxmin_lattice_max, maxmin_objective, solve_maxmin, MaxMinProblem,
    MaxMinSolution,
};
pub use quadrature::{integrate_semiinfinite, GaussLaguerre};
pub use roots::{bisect, golden_section_max};
pub use special::{exp_integral_e1, scaled_exp_integral_e1, EULER_GAMMA};

pub(crate) use maxmin::solve_two_relay;

use crate::error::{Error, Result};

/// Natural log of 2, for converting nats to bits.
pub const LN_2: f64 = std::f64::consts::LN_2;

/// `log2(1 + y)`, accurate for small `y`.
#[inline]
pub fn log2_1p(y: f64) -> f64 {
    y.ln_1p() / LN_2
}

/// `1 - 2^{-r}`, accurate for small `r`.
#[inline]
pub fn one_minus_exp2_neg(r: f64) -> f64 {
    -(-r * LN_2).exp_m1()
}

/// Tolerances, iteration caps and sample counts shared by every solver.
///
/// Two runs with equal settings produce bit-identical results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Absolute convergence tolerance.
    pub abs_tol: f64,
    /// Iteration cap for bisection, golden-section and ascent loops.
    pub max_iter: usize,
    /// Gauss-Laguerre node count for the first quadrature pass.
    pub quad_order: usize,
    /// Lattice density per dimension for the max-min grid oracle.
    pub grid_points: usize,
    /// Monte Carlo sample count.
    pub mc_samples: usize,
    /// Master seed for every random stream.
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            max_iter: 200,
            quad_order: 64,
            grid_points: 400,
            mc_samples: 1_000_000,
            seed: 1,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if self.quad_order < 8 {
            return Err(Error::InvalidArgument(format!(
                "quad_order must be at least 8, got {}",
                self.quad_order
            )));
        }
        if self.grid_points < 10 {
            return Err(Error::InvalidArgument(format!(
                "grid_points must be at least 10, got {}",
                self.grid_points
            )));
        }
        if self.mc_samples < 1000 {
            return Err(Error::InvalidArgument(format!(
                "mc_samples must be at least 1000, got {}",
                self.mc_samples
            )));
        }
        Ok(())
    }
}
