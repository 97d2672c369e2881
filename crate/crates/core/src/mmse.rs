//! MMSE estimate-and-compress.
//!
//! Relay `k` forms `X̄_k = S_k^* Y_k/(|S_k|² + σ²) = U_k X + noise` and
//! compresses it through a Gaussian test channel `Z_k = X̄_k + Q_k` with
//! distortion `D_k = E|X̄_k|²/(2^{C_k} - 1)`, which meets the link budget.
//!
//! With `g = |S|²`, `s = σ²` and `q = s e^s E1(s) = E[s/(g+s)]`, the
//! moments over the Rayleigh law have closed forms:
//! `E[U] = 1 - q`, `Var U = s(1 - q) - q²`, `E[V] = q(1 + s) - s + D`, and
//! `E|X̄|² = E[U]`.

use rayon::prelude::*;

use crate::channel::{sample_state, seeded_rng, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::{scaled_exp_integral_e1, SolverSettings, LN_2};

/// Fading law of the per-relay power gain `g = |S|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingLaw {
    /// Unit-mean exponential gain.
    Rayleigh,
    /// Deterministic gain; makes `Var U = 0` so the rate is closed form.
    Constant { gain: f64 },
}

impl FadingLaw {
    fn validate(self) -> Result<()> {
        match self {
            FadingLaw::Constant { gain } if !(gain > 0.0 && gain.is_finite()) => Err(
                Error::InvalidArgument(format!("constant gain must be positive, got {gain}")),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseCalibration {
    /// `E|X̄_k|²`.
    pub est_power: [f64; 2],
    /// Test-channel distortion `D_k`.
    pub distortion: [f64; 2],
    /// `E[U_k]`.
    pub u_mean: [f64; 2],
    /// `Var(U_k)`.
    pub u_var: [f64; 2],
    /// `E[V_k]`, the mean conditional noise variance including `D_k`.
    pub v_mean: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmseResult {
    pub rate: f64,
    /// 95% half-width of the Monte Carlo term.
    pub mc_halfwidth: f64,
    /// Gaussian bound on `I(X̄_k; Z_k)`, which should equal `C_k`.
    pub constraint_check: [f64; 2],
    pub diagnostic: Option<String>,
}

/// Per-relay `(E[U], Var U)` under `law`.
fn u_moments(noise_power: f64, law: FadingLaw) -> Result<(f64, f64)> {
    Ok(match law {
        FadingLaw::Rayleigh => {
            let s = noise_power;
            let q = s * scaled_exp_integral_e1(s)?;
            (1.0 - q, (s * (1.0 - q) - q * q).max(0.0))
        }
        FadingLaw::Constant { gain } => (gain / (gain + noise_power), 0.0),
    })
}

/// `E[U s/(g+s)]`, the estimation-noise part of `E[V]`.
fn estimation_noise(noise_power: f64, law: FadingLaw) -> Result<f64> {
    Ok(match law {
        FadingLaw::Rayleigh => {
            let s = noise_power;
            let q = s * scaled_exp_integral_e1(s)?;
            (q * (1.0 + s) - s).max(0.0)
        }
        FadingLaw::Constant { gain } => {
            let total = gain + noise_power;
            gain * noise_power / (total * total)
        }
    })
}

pub fn calibrate(config: &SystemConfig, settings: &SolverSettings) -> Result<MmseCalibration> {
    calibrate_with(config, FadingLaw::Rayleigh, settings)
}

pub fn calibrate_with(
    config: &SystemConfig,
    law: FadingLaw,
    settings: &SolverSettings,
) -> Result<MmseCalibration> {
    settings.validate()?;
    law.validate()?;
    let budgets = config.budgets();
    if let Some(k) = budgets.iter().position(|&c| c == 0.0) {
        return Err(Error::DegenerateBudget { relay: k + 1 });
    }
    let (mean, var) = u_moments(config.noise_power, law)?;
    let noise = estimation_noise(config.noise_power, law)?;
    // E|X̄|² = E[U² + U s/(g+s)] = E[U].
    let distortion = budgets.map(|c| mean / (c * LN_2).exp_m1());
    Ok(MmseCalibration {
        est_power: [mean; 2],
        distortion,
        u_mean: [mean; 2],
        u_var: [var; 2],
        v_mean: distortion.map(|d| noise + d),
    })
}

/// `E[log2(a t + b)]` for unit-mean exponential `t`.
pub fn expected_log2_affine(a: f64, b: f64) -> Result<f64> {
    if !(b > 0.0) || a < 0.0 {
        return Err(Error::Domain(format!(
            "need a >= 0 and b > 0, got a = {a}, b = {b}"
        )));
    }
    if a == 0.0 {
        return Ok(b.log2());
    }
    Ok(b.log2() + scaled_exp_integral_e1(b / a)? / LN_2)
}

const BATCH: usize = 1 << 16;

/// `log2 det(u uᵀ + diag(v))` for the two relays.
fn log2_det(u: [f64; 2], v: [f64; 2]) -> f64 {
    (u[0] * u[0] * v[1] + u[1] * u[1] * v[0] + v[0] * v[1]).log2()
}

fn relay_terms(gain: f64, noise_power: f64, distortion: f64) -> (f64, f64) {
    let total = gain + noise_power;
    let u = gain / total;
    (u, u * noise_power / total + distortion)
}

/// Mean and 95% half-width of `E[log2 det]` over the fading.
fn joint_entropy_term(
    noise_power: f64,
    distortion: [f64; 2],
    law: FadingLaw,
    settings: &SolverSettings,
) -> (f64, f64) {
    if let FadingLaw::Constant { gain } = law {
        let (u, v1) = relay_terms(gain, noise_power, distortion[0]);
        let (_, v2) = relay_terms(gain, noise_power, distortion[1]);
        return (log2_det([u, u], [v1, v2]), 0.0);
    }
    let n = settings.mc_samples;
    let batches = n.div_ceil(BATCH);
    let sums: Vec<(f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = seeded_rng(settings.seed, b as u64);
            let count = BATCH.min(n - b * BATCH);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..count {
                let [g1, g2] = sample_state(&mut rng).gains();
                let (u1, v1) = relay_terms(g1, noise_power, distortion[0]);
                let (u2, v2) = relay_terms(g2, noise_power, distortion[1]);
                let x = log2_det([u1, u2], [v1, v2]);
                sum += x;
                sum_sq += x * x;
            }
            (sum, sum_sq)
        })
        .collect();
    let (sum, sum_sq) = sums
        .iter()
        .fold((0.0, 0.0), |(s, q), (bs, bq)| (s + bs, q + bq));
    let count = n as f64;
    let mean = sum / count;
    let var = if n > 1 {
        ((sum_sq - count * mean * mean) / (count - 1.0)).max(0.0)
    } else {
        0.0
    };
    (mean, 1.96 * (var / count).sqrt())
}

pub fn mmse_rate(config: &SystemConfig, settings: &SolverSettings) -> Result<MmseResult> {
    mmse_rate_with(config, FadingLaw::Rayleigh, settings)
}

pub fn mmse_rate_with(
    config: &SystemConfig,
    law: FadingLaw,
    settings: &SolverSettings,
) -> Result<MmseResult> {
    let calibration = match calibrate_with(config, law, settings) {
        Ok(c) => c,
        Err(Error::DegenerateBudget { relay }) => {
            return Ok(MmseResult {
                rate: 0.0,
                mc_halfwidth: 0.0,
                constraint_check: [0.0; 2],
                diagnostic: Some(format!(
                    "relay {relay} has a zero budget, so its distortion is unbounded"
                )),
            })
        }
        Err(e) => return Err(e),
    };
    let (joint, mc_halfwidth) =
        joint_entropy_term(config.noise_power, calibration.distortion, law, settings);
    let mut rate = joint;
    for k in 0..2 {
        rate -= expected_log2_affine(calibration.u_var[k], calibration.v_mean[k])?;
    }
    let constraint_check = [0, 1].map(|k| {
        (calibration.est_power[k] / calibration.distortion[k]).ln_1p() / LN_2
    });
    Ok(MmseResult {
        rate,
        mc_halfwidth,
        constraint_check,
        diagnostic: None,
    })
}
