use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_CUTOFF: f64 = 1.0;
const CF_MAX_TERMS: usize = 500;

/// Exponential integral `E1(t) = ∫_t^∞ e^{-x}/x dx` for `t > 0`.
///
/// Power series below `t = 1`, Lentz continued fraction above; relative
/// error is below `1e-12` on both branches.
pub fn exp_integral_e1(t: f64) -> Result<f64> {
    check_positive(t)?;
    if t <= SERIES_CUTOFF {
        Ok(e1_series(t))
    } else {
        Ok(e1_scaled_continued_fraction(t) * (-t).exp())
    }
}

/// `e^t E1(t)`, which stays finite where `E1(t)` alone underflows.
///
/// For a unit-mean exponential `g`, this is `E[1/g | g >= t]`.
pub fn scaled_exp_integral_e1(t: f64) -> Result<f64> {
    check_positive(t)?;
    if t <= SERIES_CUTOFF {
        Ok(e1_series(t) * t.exp())
    } else {
        Ok(e1_scaled_continued_fraction(t))
    }
}

fn check_positive(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("E1 requires a finite t > 0, got {t}")))
    }
}

// E1(t) = -γ - ln t - Σ_{k≥1} (-t)^k / (k·k!)
fn e1_series(t: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        let k = k as f64;
        term *= -t / k;
        let contribution = term / k;
        sum += contribution;
        if contribution.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - t.ln() - sum
}

// e^t E1(t) = 1/(t+1- 1/(t+3- 4/(t+5- ...))), modified Lentz.
fn e1_scaled_continued_fraction(t: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = t + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..CF_MAX_TERMS {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate_semiinfinite, SolverSettings};

    fn quadrature_e1(t: f64) -> f64 {
        let settings = SolverSettings::default();
        integrate_semiinfinite(|x| (-x).exp() / x, t, &settings).unwrap()
    }

    #[test]
    fn known_values() {
        let e1_one = exp_integral_e1(1.0).unwrap();
        assert!((e1_one - 0.219_383_934_4).abs() < 1e-10);
        let e1_half = exp_integral_e1(0.5).unwrap();
        assert!((e1_half - 0.559_773_594_8).abs() < 1e-10);
    }

    #[test]
    fn matches_quadrature_oracle() {
        // direct quadrature of the defining integral
        for &t in &[0.5, 1.0, 1.5, 3.0, 10.0] {
            let oracle = quadrature_e1(t);
            let value = exp_integral_e1(t).unwrap();
            assert!(
                ((value - oracle) / oracle).abs() < 1e-10,
                "t={t}: {value} vs {oracle}"
            );
        }
        assert!((quadrature_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-10);
    }

    #[test]
    fn branches_agree_at_the_cutoff() {
        let below = e1_series(1.0);
        let above = e1_scaled_continued_fraction(1.0) * (-1.0f64).exp();
        assert!(((below - above) / above).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_squeeze_at_large_argument() {
        let t = 50.0;
        let value = exp_integral_e1(t).unwrap();
        let upper = (-t).exp() / t;
        let lower = (-t).exp() / (t + 1.0);
        assert!(value < upper && value > lower);
    }

    #[test]
    fn scaled_form_is_consistent() {
        for &t in &[0.01, 0.7, 1.0, 4.0, 30.0] {
            let scaled = scaled_exp_integral_e1(t).unwrap();
            let direct = exp_integral_e1(t).unwrap() * t.exp();
            assert!(((scaled - direct) / direct).abs() < 1e-12);
        }
        // deep tail, where E1 itself underflows
        let scaled = scaled_exp_integral_e1(1000.0).unwrap();
        assert!((scaled - 1.0 / 1001.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_nonpositive_arguments() {
        for &t in &[0.0, -1.0, f64::NAN] {
            assert!(matches!(exp_integral_e1(t), Err(Error::Domain(_))));
        }
    }
}
