use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::SolverSettings;
use crate::error::{Error, Result};

const DOUBLING_ROUNDS: usize = 4;
const RESCALE_AT: f64 = 1e150;

/// Gauss-Laguerre rule: `∫_0^∞ e^{-u} g(u) du ≈ Σ w_i g(x_i)`.
///
/// Nodes are the eigenvalues of the Laguerre Jacobi matrix, polished by
/// Newton steps on `L_n`. Weights are stored as logarithms so the modified
/// weights `w_i e^{x_i}` stay finite for large orders.
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    nodes: Vec<f64>,
    log_weights: Vec<f64>,
}

impl GaussLaguerre {
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidArgument(format!(
                "Gauss-Laguerre order must be at least 2, got {order}"
            )));
        }
        let diagonal: Vec<f64> = (0..order).map(|i| (2 * i + 1) as f64).collect();
        let mut off_diagonal: Vec<f64> = (1..=order).map(|i| i as f64).collect();
        off_diagonal[order - 1] = 0.0;
        let mut nodes = tridiagonal_eigenvalues(diagonal, off_diagonal)?;
        nodes.sort_by(f64::total_cmp);

        let n = order as f64;
        let mut log_weights = Vec::with_capacity(order);
        for x in nodes.iter_mut() {
            for _ in 0..8 {
                let (p_n, p_prev, _) = laguerre_pair(order, *x);
                let step = *x * p_n / (n * (p_n - p_prev));
                *x -= step;
                if step.abs() <= 4.0 * f64::EPSILON * *x {
                    break;
                }
            }
            // w = x / (n^2 (L_n - L_{n-1})^2)
            let (p_n, p_prev, log_scale) = laguerre_pair(order, *x);
            log_weights.push(x.ln() - 2.0 * n.ln() - 2.0 * ((p_n - p_prev).abs().ln() + log_scale));
        }
        Ok(Self { nodes, log_weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_weights.iter().map(|lw| lw.exp())
    }

    /// `∫_0^∞ e^{-u} g(u) du`.
    pub fn integrate_weighted<F: Fn(f64) -> f64>(&self, g: F) -> Result<f64> {
        let mut sum = 0.0;
        for (&x, &lw) in self.nodes.iter().zip(&self.log_weights) {
            let w = lw.exp();
            if w == 0.0 {
                continue;
            }
            let value = g(x);
            if !value.is_finite() {
                return Err(Error::Domain(format!("integrand is {value} at node {x}")));
            }
            sum += w * value;
        }
        Ok(sum)
    }

    /// `∫_lower^∞ f(λ) dλ` via `λ = lower + u`, with `f` absorbing the
    /// exponential weight.
    pub fn integrate_shifted<F: Fn(f64) -> f64>(&self, f: F, lower: f64) -> Result<f64> {
        let mut sum = 0.0;
        for (&x, &lw) in self.nodes.iter().zip(&self.log_weights) {
            let value = f(lower + x);
            if !value.is_finite() {
                return Err(Error::Domain(format!(
                    "integrand is {value} at {}",
                    lower + x
                )));
            }
            if value != 0.0 {
                sum += (lw + x).exp() * value;
            }
        }
        Ok(sum)
    }
}

/// `∫_lower^∞ f(λ) dλ` for integrands that decay like `e^{-λ}`.
///
/// Starts at `settings.quad_order` nodes and doubles the order until two
/// successive passes agree within `abs_tol · max(1, |value|)`.
pub fn integrate_semiinfinite<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    settings: &SolverSettings,
) -> Result<f64> {
    if !(lower >= 0.0 && lower.is_finite()) {
        return Err(Error::Domain(format!(
            "lower limit must be finite and nonnegative, got {lower}"
        )));
    }
    let mut order = settings.quad_order;
    let mut previous = cached_rule(order)?.integrate_shifted(&f, lower)?;
    for _ in 0..DOUBLING_ROUNDS {
        order *= 2;
        let value = cached_rule(order)?.integrate_shifted(&f, lower)?;
        if (value - previous).abs() <= settings.abs_tol * value.abs().max(1.0) {
            return Ok(value);
        }
        previous = value;
    }
    Err(Error::NonConvergent {
        what: "Gauss-Laguerre order doubling",
        iterations: DOUBLING_ROUNDS,
    })
}

fn cached_rule(order: usize) -> Result<Arc<GaussLaguerre>> {
    static RULES: OnceLock<Mutex<HashMap<usize, Arc<GaussLaguerre>>>> = OnceLock::new();
    let rules = RULES.get_or_init(Default::default);
    if let Some(rule) = rules.lock().unwrap().get(&order) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(GaussLaguerre::new(order)?);
    rules
        .lock()
        .unwrap()
        .entry(order)
        .or_insert_with(|| Arc::clone(&rule));
    Ok(rule)
}

/// `(L_n(x), L_{n-1}(x), s)` with both values scaled by `e^{-s}`.
fn laguerre_pair(n: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 1.0;
    let mut current = 1.0 - x;
    let mut log_scale = 0.0;
    for k in 1..n {
        let k_f = k as f64;
        let next = ((2.0 * k_f + 1.0 - x) * current - k_f * prev) / (k_f + 1.0);
        prev = current;
        current = next;
        if current.abs() > RESCALE_AT {
            prev /= RESCALE_AT;
            current /= RESCALE_AT;
            log_scale += RESCALE_AT.ln();
        }
    }
    (current, prev, log_scale)
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL.
/// `off_diagonal[i]` couples rows `i` and `i + 1`; its last entry is unused.
fn tridiagonal_eigenvalues(mut d: Vec<f64>, mut e: Vec<f64>) -> Result<Vec<f64>> {
    let n = d.len();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let scale = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * scale {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 60 {
                return Err(Error::NonConvergent {
                    what: "tridiagonal QL",
                    iterations,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rule_matches_tabulated_values() {
        // two-point rule: nodes 2 ∓ √2, weights (2 ± √2)/4
        let rule = GaussLaguerre::new(2).unwrap();
        let s2 = 2f64.sqrt();
        assert!((rule.nodes()[0] - (2.0 - s2)).abs() < 1e-14);
        assert!((rule.nodes()[1] - (2.0 + s2)).abs() < 1e-14);
        let w: Vec<f64> = rule.weights().collect();
        assert!((w[0] - (2.0 + s2) / 4.0).abs() < 1e-14);
        assert!((w[1] - (2.0 - s2) / 4.0).abs() < 1e-14);
    }

    #[test]
    fn rule_integrates_polynomials_exactly() {
        for order in [8, 64, 256, 1024] {
            let rule = GaussLaguerre::new(order).unwrap();
            let total: f64 = rule.weights().sum();
            assert!((total - 1.0).abs() < 1e-12, "order {order}: {total}");
            // ∫ u^k e^{-u} = k!
            let m3 = rule.integrate_weighted(|u| u * u * u).unwrap();
            assert!((m3 - 6.0).abs() < 1e-10, "order {order}: {m3}");
            assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn semiinfinite_examples() {
        let settings = SolverSettings::default();
        let gamma2 = integrate_semiinfinite(|l| l * (-l).exp(), 0.0, &settings).unwrap();
        assert!((gamma2 - 1.0).abs() < 1e-12);
        let exp = integrate_semiinfinite(|l| (-l).exp(), 0.0, &settings).unwrap();
        assert!((exp - 1.0).abs() < 1e-12);
        let e1 = integrate_semiinfinite(|l| (-l).exp() / l, 1.0, &settings).unwrap();
        assert!((e1 - 0.219_383_934_4).abs() < 1e-9);
    }

    #[test]
    fn shifted_lower_limit() {
        let settings = SolverSettings::default();
        // ∫_a^∞ λ e^{-λ} dλ = (1 + a) e^{-a}
        for &a in &[0.0, 0.3, 2.0, 40.0] {
            let value = integrate_semiinfinite(|l| l * (-l).exp(), a, &settings).unwrap();
            let exact = (1.0 + a) * (-a).exp();
            assert!((value - exact).abs() < 1e-12 * exact.max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn non_finite_integrand_is_a_domain_error() {
        let settings = SolverSettings::default();
        let result = integrate_semiinfinite(|_| f64::NAN, 0.0, &settings);
        assert!(matches!(result, Err(Error::Domain(_))));
        assert!(matches!(
            integrate_semiinfinite(|l| (-l).exp(), -1.0, &settings),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn non_smooth_integrand_does_not_converge() {
        // |λ - 1| e^{-λ} has a kink, so successive orders disagree at 1e-15
        let settings = SolverSettings {
            abs_tol: 1e-15,
            ..SolverSettings::default()
        };
        let result = integrate_semiinfinite(|l| (l - 1.0).abs() * (-l).exp(), 0.0, &settings);
        assert!(matches!(result, Err(Error::NonConvergent { .. })));
    }
}
