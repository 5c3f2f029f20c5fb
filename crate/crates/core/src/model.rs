//! The three-parameter reflected Weibull distribution.
//!
//! If `Y` is Weibull with shape `delta` and scale `beta`, then `X = gamma - Y`
//! is reflected Weibull: its support is `x < gamma` and the density is
//!
//! ```text
//! f(x) = (delta / beta) * z^(delta - 1) * exp(-z^delta),   z = (gamma - x) / beta
//! ```
//!
//! The distribution function is `F(x) = exp(-z^delta)`, which rises from 0 at
//! `-inf` to 1 at the upper endpoint `gamma`.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::error::{Error, Result};

/// Shape `delta`, scale `beta`, location (upper endpoint) `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RwParams {
    pub delta: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl RwParams {
    pub fn new(delta: f64, beta: f64, gamma: f64) -> Result<Self> {
        let p = Self { delta, beta, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::InvalidParameter(format!("shape must be > 0, got {}", self.delta)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!("scale must be > 0, got {}", self.beta)));
        }
        if !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "location must be finite, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    /// Parameters of `k * X + c` for `k > 0`.
    pub fn affine(&self, k: f64, c: f64) -> Self {
        Self {
            delta: self.delta,
            beta: k * self.beta,
            gamma: k * self.gamma + c,
        }
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// `Gamma(x)` for `x > 0`, evaluated as `exp(ln_gamma(x))`.
pub fn gamma_fn(x: f64) -> f64 {
    ln_gamma(x).exp()
}

pub fn ln_pdf(x: f64, p: &RwParams) -> f64 {
    if x >= p.gamma {
        return f64::NEG_INFINITY;
    }
    let ln_z = ((p.gamma - x) / p.beta).ln();
    p.delta.ln() - p.beta.ln() + (p.delta - 1.0) * ln_z - (p.delta * ln_z).exp()
}

/// Density. Zero on `x >= gamma`, including the endpoint itself for any shape.
pub fn pdf(x: f64, p: &RwParams) -> f64 {
    ln_pdf(x, p).exp()
}

pub fn cdf(x: f64, p: &RwParams) -> f64 {
    if x >= p.gamma {
        return 1.0;
    }
    let z = (p.gamma - x) / p.beta;
    (-z.powf(p.delta)).exp()
}

pub fn quantile(u: f64, p: &RwParams) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {u}")));
    }
    Ok(p.gamma - p.beta * (-u.ln()).powf(1.0 / p.delta))
}

/// `n` inversion draws from a ChaCha8 stream keyed by `seed`.
pub fn sample(n: usize, p: &RwParams, seed: u64) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inv = 1.0 / p.delta;
    let values = (0..n)
        .map(|_| {
            let u: f64 = rng.sample(Open01);
            p.gamma - p.beta * (-u.ln()).powf(inv)
        })
        .collect();
    Sample::new(values).expect("draws are finite")
}

/// `E[(gamma - X)^k] = beta^k * Gamma(k / delta + 1)`.
pub fn moment_gm(k: u32, p: &RwParams) -> f64 {
    let k = f64::from(k);
    (k * p.beta.ln() + ln_gamma(k / p.delta + 1.0)).exp()
}

/// `(E[X], E[X^2], E[X^3])`.
pub fn raw_moments(p: &RwParams) -> (f64, f64, f64) {
    let g = p.gamma;
    let m1 = g - moment_gm(1, p);
    let m2 = 2.0 * g * m1 - g * g + moment_gm(2, p);
    let m3 = g.powi(3) - 3.0 * g * g * m1 + 3.0 * g * m2 - moment_gm(3, p);
    (m1, m2, m3)
}

/// Mean of the sample maximum: `gamma - X_(n)` is Weibull with scale
/// `beta * n^(-1/delta)`.
pub fn expected_max(n: usize, p: &RwParams) -> f64 {
    let n = n as f64;
    p.gamma - p.beta * gamma_fn(1.0 + 1.0 / p.delta) * n.powf(-1.0 / p.delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    fn p(delta: f64, beta: f64, gamma: f64) -> RwParams {
        RwParams::new(delta, beta, gamma).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn params_validation() {
        assert!(RwParams::new(0.0, 1.0, 0.0).is_err());
        assert!(RwParams::new(1.0, -1.0, 0.0).is_err());
        assert!(RwParams::new(1.0, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn pdf_examples() {
        assert!(close(pdf(-1.0, &p(1.0, 1.0, 0.0)), (-1.0f64).exp(), 1e-14));
        assert!(close(pdf(-1.0, &p(2.0, 1.0, 0.0)), 2.0 * (-1.0f64).exp(), 1e-14));
        assert_eq!(pdf(0.5, &p(2.0, 1.0, 0.0)), 0.0);
        assert_eq!(pdf(0.0, &p(0.5, 1.0, 0.0)), 0.0);
        assert!(pdf(-1e-12, &p(0.5, 1.0, 0.0)).is_finite());
    }

    #[test]
    fn cdf_examples() {
        let e = p(1.0, 1.0, 0.0);
        assert!(close(cdf(-1.0, &e), (-1.0f64).exp(), 1e-14));
        assert_eq!(cdf(0.0, &e), 1.0);
        assert_eq!(cdf(3.0, &p(2.0, 4.0, 3.0)), 1.0);
        assert!(close(cdf(-LN_2, &e), 0.5, 1e-14));
        assert_eq!(cdf(-1e6, &p(2.0, 1.0, 0.0)), 0.0);
    }

    #[test]
    fn quantile_examples() {
        let e = p(1.0, 1.0, 0.0);
        assert!(close(quantile((-1.0f64).exp(), &e).unwrap(), -1.0, 1e-14));
        assert!(close(quantile(0.5, &e).unwrap(), -LN_2, 1e-14));
        // 5 - 10 * sqrt(ln 2), evaluated independently
        let expected = 5.0 - 10.0 * 0.832_554_611_157_697_8;
        assert!(close(quantile(0.5, &p(2.0, 10.0, 5.0)).unwrap(), expected, 1e-13));
        assert!(quantile(0.0, &e).is_err());
        assert!(quantile(1.0, &e).is_err());
        assert!(quantile(f64::NAN, &e).is_err());
    }

    #[test]
    fn sampler_is_deterministic_and_inside_support() {
        let q = p(0.7, 3.0, 2.0);
        let a = sample(1000, &q, 7);
        let b = sample(1000, &q, 7);
        assert_eq!(a, b);
        assert!(a.values().iter().all(|&x| x < q.gamma));
        assert_ne!(a, sample(1000, &q, 8));
    }

    #[test]
    fn sampler_mean_matches_closed_form() {
        let q = p(2.0, 10.0, 0.0);
        let s = sample(1_000_000, &q, 11);
        let mean = s.values().iter().sum::<f64>() / s.n() as f64;
        // Gamma(1.5) = sqrt(pi) / 2
        let expected = -10.0 * PI.sqrt() / 2.0;
        assert!((mean - expected).abs() < 0.05, "mean {mean} vs {expected}");
    }

    #[test]
    fn moment_gm_examples() {
        assert!(close(moment_gm(1, &p(1.0, 2.0, 0.0)), 2.0, 1e-13));
        assert!(close(moment_gm(2, &p(1.0, 1.0, 0.0)), 2.0, 1e-13));
        // Gamma(2.5) = 1.5 * 0.5 * sqrt(pi)
        assert!(close(moment_gm(3, &p(2.0, 1.0, 0.0)), 0.75 * PI.sqrt(), 1e-13));
        // large k / delta stays finite through log-gamma
        assert!(moment_gm(3, &p(0.02, 1.0, 0.0)).is_finite());
    }

    #[test]
    fn raw_moment_examples() {
        let (m1, m2, m3) = raw_moments(&p(1.0, 1.0, 0.0));
        assert!(close(m1, -1.0, 1e-13) && close(m2, 2.0, 1e-13) && close(m3, -6.0, 1e-13));
        let (m1, _, _) = raw_moments(&p(2.0, 1.0, 0.0));
        assert!(close(m1, -PI.sqrt() / 2.0, 1e-13));
    }

    #[test]
    fn first_moment_identity() {
        let q = p(1.7, 3.2, -4.0);
        let (m1, _, _) = raw_moments(&q);
        assert!(close(moment_gm(1, &q), q.gamma - m1, 1e-12));
    }

    #[test]
    fn expected_max_examples() {
        let q = p(1.3, 2.0, 1.0);
        assert!(close(expected_max(1, &q), raw_moments(&q).0, 1e-13));
        assert!(close(expected_max(10, &p(1.0, 1.0, 0.0)), -0.1, 1e-13));
        let e20 = expected_max(20, &p(2.0, 10.0, 0.0));
        assert!(close(e20, -10.0 * (PI.sqrt() / 2.0) / 20f64.sqrt(), 1e-13));
        assert!((e20 + 1.9817).abs() < 1e-4);
    }

    #[test]
    fn expected_max_agrees_with_simulation() {
        let q = p(2.0, 10.0, 0.0);
        let reps = 100_000;
        let maxima: Vec<f64> = (0..reps).map(|r| sample(20, &q, 1_000 + r).max()).collect();
        let mean = maxima.iter().sum::<f64>() / reps as f64;
        let var = maxima.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
        let se = (var / reps as f64).sqrt();
        let expected = expected_max(20, &q);
        assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected} (se {se})");
    }
}
