//! Informed-receiver upper bound with full relay cooperation.
//!
//! With the destination knowing both fading coefficients and the relays
//! pooling their observations, the system is a two-antenna relay with a
//! single bottleneck of `C1 + C2` bits. Writing `a = νσ²` for the water
//! level on the eigenvalue `λ` of `S S^H` (density `λe^{-λ}`):
//!
//! ```text
//! budget(a) = ∫_a^∞ log2(λ/a) λe^{-λ} dλ                     = [E1(a) + e^{-a}] / ln 2
//! rate(a)   = ∫_a^∞ [log2(1 + λ/σ²) - log2(1 + ν)] λe^{-λ} dλ = [e^{-a} + (1 - σ²) e^{σ²} E1(a + σ²)] / ln 2
//! ```
//!
//! Both closed forms follow from integrating by parts against
//! `d[-(1 + λ)e^{-λ}]`. `budget` is strictly decreasing in `a`, so the water
//! level is found by bisection on `ln a`.

use crate::channel::SystemConfig;
use crate::error::Result;
use crate::numerics::{bisect, scaled_exp_integral_e1, SolverSettings, LN_2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperBoundResult {
    /// Upper bound on the bottleneck rate, bits per complex dimension.
    pub rate: f64,
    /// Water level `ν`; `+∞` when the total budget is zero.
    pub nu: f64,
    /// Compression rate spent at `ν` minus `C1 + C2`.
    pub constraint_residual: f64,
}

/// Compression rate in bits spent at water threshold `a = νσ²`.
pub fn budget_at_threshold(a: f64) -> Result<f64> {
    Ok((-a).exp() * (scaled_exp_integral_e1(a)? + 1.0) / LN_2)
}

/// Bottleneck rate in bits obtained at water threshold `a = νσ²`.
pub fn rate_at_threshold(a: f64, noise_power: f64) -> Result<f64> {
    let tail = scaled_exp_integral_e1(a + noise_power)?;
    Ok((-a).exp() * (1.0 + (1.0 - noise_power) * tail) / LN_2)
}

/// Informed-receiver rate with unlimited bottleneck, `E[log2(1 + λ/σ²)]`.
pub fn unconstrained_rate(noise_power: f64) -> Result<f64> {
    Ok((1.0 + (1.0 - noise_power) * scaled_exp_integral_e1(noise_power)?) / LN_2)
}

pub fn upper_bound(config: &SystemConfig, settings: &SolverSettings) -> Result<UpperBoundResult> {
    let total = config.total_budget();
    if total == 0.0 {
        return Ok(UpperBoundResult {
            rate: 0.0,
            nu: f64::INFINITY,
            constraint_residual: 0.0,
        });
    }
    let residual = |log_a: f64| budget_at_threshold(log_a.exp()).map(|b| b - total);

    // budget(a) > -ln(a)/ln 2 + 0.6 for a < 1, so this end lies above the target
    let lo = -(total * LN_2) - 4.0;
    let mut hi = 0.0;
    while residual(hi)? > 0.0 {
        hi += LN_2;
    }
    let mut failure = None;
    let log_a = bisect(
        |x| match residual(x) {
            Ok(r) => r,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        settings,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let a = log_a.exp();
    let rate = rate_at_threshold(a, config.noise_power)?;
    Ok(UpperBoundResult {
        rate: rate.max(0.0),
        nu: a / config.noise_power,
        constraint_residual: residual(log_a)?,
    })
}

/// `∫_a^∞ log2(λ/a) λe^{-λ} dλ` by quadrature, for cross-checking.
pub fn budget_by_quadrature(a: f64, settings: &SolverSettings) -> Result<f64> {
    crate::numerics::integrate_semiinfinite(|l| (l / a).log2() * l * (-l).exp(), a, settings)
}

/// `∫_a^∞ [log2(1 + λ/σ²) - log2(1 + ν)] λe^{-λ} dλ` by quadrature.
pub fn rate_by_quadrature(a: f64, noise_power: f64, settings: &SolverSettings) -> Result<f64> {
    let nu = a / noise_power;
    crate::numerics::integrate_semiinfinite(
        |l| ((1.0 + l / noise_power).log2() - (1.0 + nu).log2()) * l * (-l).exp(),
        a,
        settings,
    )
}
