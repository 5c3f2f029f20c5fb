//! Numerical kernels shared by the estimators.

mod optimize;
mod quadrature;
mod roots;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use optimize::{maximize_unimodal, Maximum};
pub use quadrature::{integrate_1d, Quadrature};
pub(crate) use quadrature::integrate_vec;
pub use roots::find_root_bracketed;

/// Tolerances for adaptive Gauss-Kronrod integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-6,
            absolute_tolerance: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSpec {
    pub fn with_relative(relative_tolerance: f64) -> Self {
        Self {
            relative_tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.relative_tolerance > 0.0 && self.absolute_tolerance > 0.0) {
            return Err(Error::InvalidParameter("quadrature tolerances must be > 0".into()));
        }
        if self.max_subdivisions < 10 {
            return Err(Error::InvalidParameter("max_subdivisions must be >= 10".into()));
        }
        Ok(())
    }
}

/// Search interval for the 1-D root finder and maximizer.
///
/// `tolerance` is relative on the argument, with magnitudes below 1 treated as
/// 1: iteration stops once the located point is known to within
/// `tolerance * max(|x|, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketSpec {
    pub lo: f64,
    pub hi: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl BracketSpec {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            tolerance: 1e-5,
            max_iterations: 200,
        }
    }

    pub fn tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidParameter(format!(
                "bracket needs finite lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("bracket tolerance must be > 0".into()));
        }
        Ok(())
    }

    pub(crate) fn x_tolerance(&self, x: f64) -> f64 {
        self.tolerance * x.abs().max(1.0)
    }
}

/// `ln(sum(exp(t)))` with a max shift. Empty input gives `-inf`.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln()
}

/// `ln(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}
