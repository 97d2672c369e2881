use super::SolverSettings;
use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Root of a continuous monotone `g` on `[lo, hi]`.
///
/// Stops once `|g(x)| <= abs_tol` or the bracket is narrower than `abs_tol`.
pub fn bisect<G: FnMut(f64) -> f64>(
    mut g: G,
    lo: f64,
    hi: f64,
    settings: &SolverSettings,
) -> Result<f64> {
    let (mut lo, mut hi) = (lo.min(hi), lo.max(hi));
    let g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if !(g_lo.is_finite() || g_hi.is_finite()) || g_lo.signum() == g_hi.signum() {
        return Err(Error::Bracket { lo, hi, g_lo, g_hi });
    }
    let lo_negative = g_lo < 0.0;
    for _ in 0..settings.max_iter {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid);
        if g_mid.abs() <= settings.abs_tol || hi - lo <= settings.abs_tol {
            return Ok(mid);
        }
        if (g_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergent {
        what: "bisection",
        iterations: settings.max_iter,
    })
}

/// Maximizer of a unimodal `f` on `[a, b]` by golden-section search.
///
/// Returns `(x, f(x), iterations)`. Ties keep the left point, so flat tops
/// resolve toward the smaller argument.
pub fn golden_section_max<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, f64, usize)> {
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while b - a > tol {
        if iterations >= max_iter {
            return Err(Error::NonConvergent {
                what: "golden-section search",
                iterations,
            });
        }
        iterations += 1;
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    Ok(if f1 >= f2 { (x1, f1, iterations) } else { (x2, f2, iterations) })
}
