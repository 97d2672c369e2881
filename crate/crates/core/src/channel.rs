//! System model: unit-power Gaussian source, i.i.d. Rayleigh fading to the
//! two relays, per-relay Gaussian noise of power `σ²`, and the relay links'
//! bottleneck budgets.
//!
//! Everything is linear scale. The SNR of the model is `ρ = 1/σ²`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Noise power and bottleneck budgets (bits per complex dimension).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub noise_power: f64,
    pub c1: f64,
    pub c2: f64,
}

impl SystemConfig {
    pub fn new(noise_power: f64, c1: f64, c2: f64) -> Result<Self> {
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise power must be positive and finite, got {noise_power}"
            )));
        }
        for (name, c) in [("c1", c1), ("c2", c2)] {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and nonnegative, got {c}"
                )));
            }
        }
        Ok(Self { noise_power, c1, c2 })
    }

    /// Configuration with `σ² = 10^{-snr_db/10}`.
    pub fn from_snr_db(snr_db: f64, c1: f64, c2: f64) -> Result<Self> {
        Self::new(10f64.powf(-snr_db / 10.0), c1, c2)
    }

    pub fn snr(&self) -> f64 {
        1.0 / self.noise_power
    }

    pub fn snr_db(&self) -> f64 {
        -10.0 * self.noise_power.log10()
    }

    pub fn budgets(&self) -> [f64; 2] {
        [self.c1, self.c2]
    }

    pub fn total_budget(&self) -> f64 {
        self.c1 + self.c2
    }
}

/// One realization of the fading coefficients `(S_1, S_2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelState {
    pub s1: Complex64,
    pub s2: Complex64,
}

impl ChannelState {
    /// Power gains `|S_k|^2`.
    pub fn gains(&self) -> [f64; 2] {
        [self.s1.norm_sqr(), self.s2.norm_sqr()]
    }

    /// Channel SNRs `ρ_k = |S_k|^2 / σ²`.
    pub fn snr_pair(&self, noise_power: f64) -> SnrPair {
        let [g1, g2] = self.gains();
        SnrPair {
            rho1: g1 / noise_power,
            rho2: g2 / noise_power,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPair {
    pub rho1: f64,
    pub rho2: f64,
}

impl SnrPair {
    pub fn new(rho1: f64, rho2: f64) -> Result<Self> {
        for rho in [rho1, rho2] {
            if !(rho >= 0.0 && rho.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "SNR must be finite and nonnegative, got {rho}"
                )));
            }
        }
        Ok(Self { rho1, rho2 })
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.rho1, self.rho2]
    }

    pub fn swapped(&self) -> Self {
        Self {
            rho1: self.rho2,
            rho2: self.rho1,
        }
    }
}

/// Random source for stream `stream` of master seed `seed`.
///
/// Distinct streams are independent, so parallel workers can each own one.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Circularly symmetric complex Gaussian with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws independent `S_1, S_2 ~ CN(0, 1)`.
pub fn sample_state<R: Rng + ?Sized>(rng: &mut R) -> ChannelState {
    let s1 = complex_gaussian(rng);
    let s2 = complex_gaussian(rng);
    ChannelState { s1, s2 }
}

/// Density `λ e^{-λ}` of the nonzero eigenvalue of `S S^H`.
pub fn eigen_density(lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!(
            "eigenvalue density is defined for λ >= 0, got {lambda}"
        )));
    }
    Ok(lambda * (-lambda).exp())
}

/// `P(ξ <= b) = e^{-1/b}` for the inverse gain `ξ = |S|^{-2}`.
pub fn xi_cdf(b: f64) -> f64 {
    if b <= 0.0 {
        0.0
    } else {
        (-1.0 / b).exp()
    }
}

/// The `p`-quantile of `ξ = |S|^{-2}`, i.e. `-1/ln p`.
pub fn xi_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {p}")));
    }
    Ok(-1.0 / p.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    const DRAWS: usize = 1_000_000;

    #[test]
    fn config_validation() {
        assert!(SystemConfig::new(0.0, 1.0, 1.0).is_err());
        assert!(SystemConfig::new(1.0, -1.0, 1.0).is_err());
        assert!(SystemConfig::new(1.0, 1.0, f64::INFINITY).is_err());
        let config = SystemConfig::from_snr_db(40.0, 10.0, 10.0).unwrap();
        assert!((config.noise_power - 1e-4).abs() < 1e-18);
        assert!((config.snr_db() - 40.0).abs() < 1e-12);
    }

    #[test]
    fn gains_are_unit_mean_exponential() {
        let mut rng = seeded_rng(11, 0);
        let mut sum = [0.0; 2];
        let mut sum_sq = [0.0; 2];
        let mut above_one = [0usize; 2];
        let mut mean_re = 0.0;
        for _ in 0..DRAWS {
            let state = sample_state(&mut rng);
            mean_re += state.s1.re;
            for (k, g) in state.gains().into_iter().enumerate() {
                sum[k] += g;
                sum_sq[k] += g * g;
                above_one[k] += usize::from(g >= 1.0);
            }
        }
        let n = DRAWS as f64;
        assert!((mean_re / n).abs() < 0.005);
        for k in 0..2 {
            let mean = sum[k] / n;
            let var = sum_sq[k] / n - mean * mean;
            assert!((0.995..=1.005).contains(&mean), "mean {mean}");
            assert!((var - 1.0).abs() < 0.02, "variance {var}");
            let tail = above_one[k] as f64 / n;
            assert!((tail - (-1.0f64).exp()).abs() < 0.002, "tail {tail}");
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed_and_stream() {
        let draw = |seed, stream| {
            let mut rng = seeded_rng(seed, stream);
            (0..5).map(|_| sample_state(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(3, 0), draw(3, 0));
        assert_ne!(draw(3, 0), draw(3, 1));
        assert_ne!(draw(3, 0), draw(4, 0));
    }

    #[test]
    fn eigen_density_shape() {
        assert_eq!(eigen_density(0.0).unwrap(), 0.0);
        assert!((eigen_density(1.0).unwrap() - 0.367_879_441).abs() < 1e-9);
        assert!(eigen_density(-0.1).is_err());
        let values: Vec<f64> = (0..=400).map(|i| eigen_density(i as f64 * 0.025).unwrap()).collect();
        let peak = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(peak, 40);
        assert!(values[..=40].windows(2).all(|w| w[0] <= w[1]));
        assert!(values[40..].windows(2).all(|w| w[0] >= w[1]));
        assert!(values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn quantiles_invert_the_cdf() {
        assert!((xi_quantile(0.25).unwrap() - 0.721_348).abs() < 1e-6);
        assert!((xi_quantile(0.5).unwrap() - 1.442_695).abs() < 1e-6);
        assert!((xi_quantile(0.75).unwrap() - 3.476_059).abs() < 1e-6);
        for &p in &[0.01, 0.3, 0.99] {
            assert!((xi_cdf(xi_quantile(p).unwrap()) - p).abs() < 1e-14);
        }
        for &p in &[0.0, 1.0, -0.5, f64::NAN] {
            assert!(xi_quantile(p).is_err());
        }
    }

    #[test]
    fn empirical_cdf_matches_quantile_levels() {
        let mut rng = seeded_rng(5, 0);
        let xi: Vec<f64> = (0..DRAWS)
            .map(|_| 1.0 / complex_gaussian(&mut rng).norm_sqr())
            .collect();
        for j_count in [2usize, 4, 8] {
            for j in 1..j_count {
                let p = j as f64 / j_count as f64;
                let b = xi_quantile(p).unwrap();
                let fraction = xi.iter().filter(|&&x| x <= b).count() as f64 / DRAWS as f64;
                let se = (p * (1.0 - p) / DRAWS as f64).sqrt();
                assert!((fraction - p).abs() < 3.0 * se, "J={j_count} j={j}: {fraction}");
            }
        }
    }
}
