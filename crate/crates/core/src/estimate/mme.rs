//! Method-of-moments estimation.
//!
//! Matching the first three raw moments is equivalent to matching the mean,
//! the variance and the skewness. Skewness does not depend on scale or
//! location, so the shape is found from a one-dimensional equation and the
//! scale and location follow in closed form.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{EstimationResult, Method};
use crate::data::{GroupedSample, Sample};
use crate::error::{Error, Result};
use crate::model::{ln_gamma, raw_moments, RwParams};
use crate::numerics::{find_root_bracketed, BracketSpec};

/// Shape interval searched by the moment solver.
pub const SHAPE_RANGE: (f64, f64) = (0.02, 500.0);

const MOMENT_CHECK_TOLERANCE: f64 = 1e-6;

/// Population (divide-by-n) sample moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub n: usize,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub central2: f64,
    pub central3: f64,
}

impl SampleMoments {
    pub fn skewness(&self) -> f64 {
        self.central3 / self.central2.powf(1.5)
    }

    /// Sheppard's correction for grouping into classes of width `h`: the
    /// variance loses `h^2 / 12`; the third central moment is unchanged.
    pub fn sheppard_corrected(&self, h: f64) -> Self {
        let c = h * h / 12.0;
        Self {
            m2: self.m2 - c,
            m3: self.m3 - 3.0 * self.m1 * c,
            central2: self.central2 - c,
            ..*self
        }
    }
}

/// Raw moments as means of powers; central moments by a single-pass
/// (Welford-style) update.
pub fn sample_moments(s: &Sample) -> SampleMoments {
    let mut count = 0.0;
    let mut mean = 0.0;
    let mut m2c = 0.0;
    let mut m3c = 0.0;
    let (mut p1, mut p2, mut p3) = (0.0, 0.0, 0.0);
    for &x in s.values() {
        p1 += x;
        p2 += x * x;
        p3 += x * x * x;
        let n1 = count;
        count += 1.0;
        let delta = x - mean;
        let delta_n = delta / count;
        let term1 = delta * delta_n * n1;
        mean += delta_n;
        m3c += term1 * delta_n * (count - 2.0) - 3.0 * delta_n * m2c;
        m2c += term1;
    }
    if count == 0.0 {
        return SampleMoments {
            n: 0,
            m1: 0.0,
            m2: 0.0,
            m3: 0.0,
            central2: 0.0,
            central3: 0.0,
        };
    }
    SampleMoments {
        n: s.n(),
        m1: p1 / count,
        m2: p2 / count,
        m3: p3 / count,
        central2: m2c / count,
        central3: m3c / count,
    }
}

/// Moments of the midpoint expansion, Sheppard-corrected when all classes
/// share one width.
pub fn grouped_moments(g: &GroupedSample) -> (SampleMoments, Option<f64>) {
    let raw = sample_moments(&g.expand());
    match g.common_width() {
        Some(h) => (raw.sheppard_corrected(h), Some(h)),
        None => (raw, None),
    }
}

/// `(ln Gamma(1 + 1/d), D2, D3)` with `Dk = ln Gamma(1 + k/d) - k ln Gamma(1 + 1/d)`.
fn log_gamma_ratios(delta: f64) -> (f64, f64, f64) {
    let l1 = ln_gamma(1.0 + 1.0 / delta);
    let l2 = ln_gamma(1.0 + 2.0 / delta);
    let l3 = ln_gamma(1.0 + 3.0 / delta);
    (l1, l2 - 2.0 * l1, l3 - 3.0 * l1)
}

/// Skewness of the Weibull variable `gamma - X` as a function of shape.
/// The sample skewness of `X` has the opposite sign.
pub fn shape_equation(delta: f64) -> f64 {
    let (_, d2, d3) = log_gamma_ratios(delta);
    if d3 < 700.0 {
        (d3.exp_m1() - 3.0 * d2.exp_m1()) / d2.exp_m1().powf(1.5)
    } else {
        let ln_num = d3 + (-3.0 * (d2 - d3).exp()).ln_1p();
        let ln_den = 1.5 * (d2 + (-(-d2).exp()).ln_1p());
        (ln_num - ln_den).exp()
    }
}

fn shape_equation_is_monotone() -> bool {
    static MONOTONE: OnceLock<bool> = OnceLock::new();
    *MONOTONE.get_or_init(|| {
        let (lo, hi) = (SHAPE_RANGE.0.ln(), SHAPE_RANGE.1.ln());
        let grid: Vec<f64> = (0..50)
            .map(|i| shape_equation((lo + (hi - lo) * i as f64 / 49.0).exp()))
            .collect();
        grid.windows(2).all(|w| w[1] < w[0])
    })
}

pub fn fit_mme(s: &Sample) -> Result<EstimationResult> {
    s.require_estimable()?;
    fit_mme_moments(&sample_moments(s))
}

/// Moment fit for grouped data. Moments come from class midpoints with
/// Sheppard's variance correction when class widths are equal.
pub fn fit_mme_grouped(g: &GroupedSample) -> Result<EstimationResult> {
    g.expand().require_estimable()?;
    let (moments, width) = grouped_moments(g);
    let mut fit = fit_mme_moments(&moments)?;
    let note = match width {
        Some(h) => format!("grouped data: class midpoints, Sheppard variance correction (h = {h})"),
        None => "grouped data: class midpoints, unequal widths so no Sheppard correction".to_string(),
    };
    fit.notes = if fit.notes.is_empty() { note } else { format!("{note}; {}", fit.notes) };
    Ok(fit)
}

/// Solve the moment equations for given moments.
pub fn fit_mme_moments(m: &SampleMoments) -> Result<EstimationResult> {
    if !(m.central2 > 0.0) {
        return Err(Error::DegenerateSample(format!(
            "variance must be positive for moment estimation (got {})",
            m.central2
        )));
    }
    if !shape_equation_is_monotone() {
        return Err(Error::Convergence {
            what: "moment shape equation monotonicity check",
            value: f64::NAN,
            error: f64::NAN,
        });
    }
    let target = -m.skewness();
    let lo = shape_equation(SHAPE_RANGE.1);
    let hi = shape_equation(SHAPE_RANGE.0);
    if !(target >= lo && target <= hi) {
        return Err(Error::NoMomentSolution { target, lo, hi });
    }
    let mut iterations = 0;
    let bracket = BracketSpec::new(SHAPE_RANGE.0.ln(), SHAPE_RANGE.1.ln())
        .tolerance(1e-15)
        .max_iterations(500);
    let u = find_root_bracketed(
        |u| {
            iterations += 1;
            shape_equation(u.exp()) - target
        },
        &bracket,
    )?;
    let delta = u.exp();
    let (l1, d2, _) = log_gamma_ratios(delta);
    // Gamma(1+2/d) - Gamma(1+1/d)^2 = Gamma(1+1/d)^2 * expm1(D2)
    let shape_var = (2.0 * l1).exp() * d2.exp_m1();
    let beta = (m.central2 / shape_var).sqrt();
    let gamma = m.m1 + beta * l1.exp();
    let params = RwParams::new(delta, beta, gamma)?;

    let (e1, e2, e3) = raw_moments(&params);
    let scale = m.m1.abs() + m.central2.sqrt();
    let worst = [
        (e1 - m.m1).abs() / scale,
        (e2 - m.m2).abs() / scale.powi(2),
        (e3 - m.m3).abs() / scale.powi(3),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let converged = worst <= MOMENT_CHECK_TOLERANCE;
    let notes = if converged {
        String::new()
    } else {
        format!("raw-moment equations satisfied only to {worst:.2e} relative")
    };
    Ok(EstimationResult {
        method: Method::Mme,
        params,
        log_likelihood: None,
        converged,
        boundary_hit: false,
        iterations,
        notes,
    })
}
