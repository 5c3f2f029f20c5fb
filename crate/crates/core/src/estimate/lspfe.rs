//! Location-and-scale-free estimation.
//!
//! The normalized order statistics `W_(i) = (X_(i) - X_(1)) / (X_(n) - X_(1))`
//! do not depend on location or scale, so their joint density is a likelihood
//! for the shape alone. With `v = X_(n)` and `u = X_(1)` of a standard sample,
//!
//! ```text
//! psi(w) = n! * integral over u < v < 0 of (v - u)^(n-2) g(u) g(v) prod g(u + (v - u) w_i) du dv
//! ```
//!
//! where `g` is the standard density. Writing `a = -v`, `r = v - u`,
//! `c_i = 1 - w_i`, every point becomes the Weibull variate `y_i = a + r c_i`
//! and the integral is taken over `(s, t) = (ln a, ln r)` on the whole plane:
//!
//! ```text
//! Lambda(s, t) = ln n! + n ln delta + s + (n-1) t + sum[(delta - 1) ln y_i - y_i^delta]
//! ```
//!
//! The integrand is a sharp ridge whose position and width change by orders of
//! magnitude with the shape, so both levels of the nested quadrature are
//! centred on the mode and scaled by the local curvature before the infinite
//! range is mapped to the unit interval.

use serde::{Deserialize, Serialize};

use super::{EstimationResult, Method};
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::model::{gamma_fn, ln_gamma, RwParams};
use crate::numerics::{
    find_root_bracketed, integrate_vec, log_sum_exp, maximize_unimodal, BracketSpec, Quadrature, QuadratureSpec,
};

/// Shape interval of the likelihood search.
pub const SHAPE_RANGE: (f64, f64) = (1e-3, 1e3);

/// Relative spacing applied to tied observations before forming `W`.
pub const TIE_JITTER: f64 = 1e-9;

/// Normalized order statistics; `w[0] = 0` and `w[n-1] = 1` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WStats {
    pub w: Vec<f64>,
    pub n: usize,
    pub spread: f64,
}

pub fn compute_w(s: &Sample) -> Result<WStats> {
    s.require_estimable()?;
    let (lo, spread) = (s.min(), s.spread());
    let n = s.n();
    let mut w: Vec<f64> = s.values().iter().map(|&x| (x - lo) / spread).collect();
    w[0] = 0.0;
    w[n - 1] = 1.0;
    Ok(WStats { w, n, spread })
}

/// Log-space integrand over `(s, t)` for fixed `delta` and `W`.
struct Integrand {
    delta: f64,
    /// `ln(1 - w_i)`; `-inf` for the maximum.
    ln_c: Vec<f64>,
    ln_const: f64,
}

#[derive(Debug, Clone, Copy)]
struct Local {
    value: f64,
    grad: [f64; 2],
    /// `[ss, tt, st]`
    hess: [f64; 3],
}

impl Integrand {
    fn new(delta: f64, w: &WStats) -> Self {
        let n = w.n as f64;
        Self {
            delta,
            ln_c: w.w.iter().map(|&wi| (1.0 - wi).ln()).collect(),
            ln_const: ln_gamma(n + 1.0) + n * delta.ln(),
        }
    }

    fn n(&self) -> f64 {
        self.ln_c.len() as f64
    }

    /// `ln y_i` with the weights `p_i = a / y_i` and `q_i = 1 - p_i`.
    #[inline]
    fn split(s: f64, t: f64, ln_c: f64) -> (f64, f64, f64) {
        let b = t + ln_c;
        if b == f64::NEG_INFINITY {
            return (s, 1.0, 0.0);
        }
        let d = s - b;
        if d >= 0.0 {
            let e = (-d).exp();
            (s + e.ln_1p(), 1.0 / (1.0 + e), e / (1.0 + e))
        } else {
            let e = d.exp();
            (b + e.ln_1p(), e / (1.0 + e), 1.0 / (1.0 + e))
        }
    }

    /// `(Lambda, d Lambda / d delta)`; the derivative is `n / delta + sum ln y (1 - y^delta)`.
    fn value_and_shape_slope(&self, s: f64, t: f64) -> (f64, f64) {
        let d = self.delta;
        let mut acc = 0.0;
        let mut slope = 0.0;
        for &lc in &self.ln_c {
            let (l, _, _) = Self::split(s, t, lc);
            let y = (d * l).exp();
            acc += (d - 1.0) * l - y;
            slope += l * (1.0 - y);
        }
        let value = self.ln_const + s + (self.n() - 1.0) * t + acc;
        if value.is_nan() || value == f64::NEG_INFINITY {
            return (f64::NEG_INFINITY, 0.0);
        }
        (value, self.n() / d + slope)
    }

    fn local(&self, s: f64, t: f64) -> Local {
        let d = self.delta;
        let mut acc = 0.0;
        let (mut gs, mut gt) = (1.0, self.n() - 1.0);
        let (mut hss, mut htt, mut hst) = (0.0, 0.0, 0.0);
        for &lc in &self.ln_c {
            let (l, p, q) = Self::split(s, t, lc);
            let y = (d * l).exp();
            acc += (d - 1.0) * l - y;
            let d1 = (d - 1.0) - d * y;
            let d2 = -d * d * y;
            let pq = p * q;
            gs += p * d1;
            gt += if q == 0.0 { 0.0 } else { q * d1 };
            hss += d2 * p * p + d1 * pq;
            htt += if q == 0.0 { 0.0 } else { d2 * q * q + d1 * pq };
            hst += if pq == 0.0 { 0.0 } else { (d2 - d1) * pq };
        }
        Local {
            value: self.ln_const + s + (self.n() - 1.0) * t + acc,
            grad: [gs, gt],
            hess: [hss, htt, hst],
        }
    }

    fn value(&self, s: f64, t: f64) -> f64 {
        let v = self.local(s, t).value;
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    /// Joint mode by damped Newton iteration with a scaled-gradient fallback.
    fn joint_mode(&self) -> (f64, f64, Local) {
        let d = self.delta;
        let n = self.n();
        // typical minimum and maximum of n standard Weibull draws
        let s0 = -n.ln() / d;
        let top = n.ln().ln() / d;
        let mut x = [s0, top + (-(s0 - top).exp_m1()).ln()];
        let mut cur = self.local(x[0], x[1]);
        for _ in 0..200 {
            let [gs, gt] = cur.grad;
            let [hss, htt, hst] = cur.hess;
            let det = hss * htt - hst * hst;
            let mut step = if hss < 0.0 && det > 0.0 {
                [-(htt * gs - hst * gt) / det, -(hss * gt - hst * gs) / det]
            } else {
                let scale = hss.abs() + htt.abs() + 1.0;
                [gs / scale, gt / scale]
            };
            let len = step[0].hypot(step[1]);
            if len > 5.0 {
                step = [step[0] * 5.0 / len, step[1] * 5.0 / len];
            }
            let mut moved = false;
            let mut frac = 1.0;
            for _ in 0..60 {
                let cand = [x[0] + frac * step[0], x[1] + frac * step[1]];
                let next = self.local(cand[0], cand[1]);
                if next.value >= cur.value {
                    moved = cand != x;
                    x = cand;
                    cur = next;
                    break;
                }
                frac *= 0.5;
            }
            let size = frac * step[0].hypot(step[1]);
            if !moved || size <= 1e-12 * (1.0 + x[0].abs() + x[1].abs()) {
                break;
            }
        }
        (x[0], x[1], cur)
    }

    /// Maximizer of `Lambda(s, .)`, from the root of its `t`-slope.
    fn inner_mode(&self, s: f64, hint: f64) -> f64 {
        let slope = |t: f64| self.local(s, t).grad[1];
        let (mut lo, mut hi) = (hint, hint);
        let mut step = 1.0;
        while !(slope(lo) > 0.0) && step < 1e6 {
            lo -= step;
            step *= 2.0;
        }
        step = 1.0;
        while !(slope(hi) < 0.0) && step < 1e6 {
            hi += step;
            step *= 2.0;
        }
        if lo == hi {
            return lo;
        }
        find_root_bracketed(slope, &BracketSpec::new(lo, hi).tolerance(1e-10)).unwrap_or(hint)
    }
}

/// Integrals of `exp(Lambda - shift)`, `Lambda' exp(Lambda - shift)` and
/// `Lambda'^2 exp(Lambda - shift)` over the plane, `'` being the shape derivative.
struct PlaneIntegral {
    shift: f64,
    value: [f64; 3],
    error: [f64; 3],
    failed: bool,
}

fn integrate_plane(delta: f64, w: &WStats, spec: &QuadratureSpec, with_slope: bool) -> Result<PlaneIntegral> {
    if !(delta >= SHAPE_RANGE.0 && delta <= SHAPE_RANGE.1) {
        return Err(Error::Domain(format!(
            "shape {delta} outside [{}, {}]",
            SHAPE_RANGE.0, SHAPE_RANGE.1
        )));
    }
    spec.validate()?;
    let f = Integrand::new(delta, w);
    let (s_star, t_star, mode) = f.joint_mode();
    let shift = mode.value;
    let [hss, htt, hst] = mode.hess;
    let det = hss * htt - hst * hst;
    let sigma_s = if hss < 0.0 && det > 0.0 { (-htt / det).sqrt() } else { 1.0 };

    let inner_rel = 0.1 * spec.relative_tolerance;
    let abs = spec.absolute_tolerance;
    let slope_tol = if with_slope { [f64::INFINITY, abs] } else { [f64::INFINITY, f64::INFINITY] };
    let mut failed = false;
    let mut hint = t_star;
    let outer = integrate_vec(
        |x| {
            let s = s_star + sigma_s * x;
            let t_mode = f.inner_mode(s, hint);
            if t_mode.is_finite() {
                hint = t_mode;
            }
            let curv = f.local(s, t_mode).hess[1];
            let sigma_t = if curv < 0.0 { 1.0 / (-curv).sqrt() } else { 1.0 };
            if f.value(s, t_mode) - shift < -745.0 {
                return [0.0; 4];
            }
            let inner = integrate_vec(
                |y| {
                    let (v, slope) = f.value_and_shape_slope(s, t_mode + sigma_t * y);
                    let e = (v - shift).exp();
                    if e == 0.0 {
                        return [0.0; 3];
                    }
                    [e, slope * e, slope * slope * e]
                },
                f64::NEG_INFINITY,
                f64::INFINITY,
                inner_rel,
                [abs, slope_tol[0], slope_tol[1]],
                spec.max_subdivisions,
            );
            let (v, e) = match inner {
                Ok(r) => r,
                Err(fail) => {
                    failed = true;
                    (fail.value, fail.error)
                }
            };
            [sigma_t * v[0], sigma_t * v[1], sigma_t * v[2], sigma_t * e[0]]
        },
        f64::NEG_INFINITY,
        f64::INFINITY,
        spec.relative_tolerance,
        [abs, f64::INFINITY, slope_tol[1], f64::INFINITY],
        spec.max_subdivisions,
    );
    let (v, e) = match outer {
        Ok(r) => r,
        Err(fail) => {
            failed = true;
            (fail.value, fail.error)
        }
    };
    let error = [
        sigma_s * (e[0] + v[3]),
        sigma_s * e[1],
        sigma_s * e[2],
    ];
    Ok(PlaneIntegral {
        shift,
        value: [sigma_s * v[0], sigma_s * v[1], sigma_s * v[2]],
        error,
        failed,
    })
}

/// `ln psi(w_2, ..., w_{n-1}; delta)` with an absolute error estimate.
pub fn w_log_likelihood(delta: f64, w: &WStats, spec: &QuadratureSpec) -> Result<Quadrature> {
    let p = integrate_plane(delta, w, spec, false)?;
    let value = p.shift + p.value[0].ln();
    let error = p.error[0] / p.value[0];
    if p.failed || !value.is_finite() {
        return Err(Error::Convergence {
            what: "W-likelihood quadrature",
            value,
            error,
        });
    }
    Ok(Quadrature { value, error })
}

/// `d/d delta` of `ln psi`: the shape-slope integral divided by the likelihood
/// integral over the same nodes.
pub fn w_log_likelihood_derivative(delta: f64, w: &WStats, spec: &QuadratureSpec) -> Result<f64> {
    let p = integrate_plane(delta, w, spec, true)?;
    let value = p.value[1] / p.value[0];
    if p.failed || !value.is_finite() {
        return Err(Error::Convergence {
            what: "W-likelihood derivative quadrature",
            value,
            error: p.error[1] / p.value[0],
        });
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeEstimate {
    pub delta: f64,
    /// The maximizer sits at an end of the search interval.
    pub boundary: bool,
    pub loglik: f64,
    pub quadrature_error: f64,
    pub evaluations: usize,
}

/// Maximize the W-likelihood over `ln delta`.
pub fn estimate_shape(w: &WStats, spec: &QuadratureSpec) -> Result<ShapeEstimate> {
    let mut first_error = None;
    let m = maximize_unimodal(
        |u| match w_log_likelihood(u.exp(), w, spec) {
            Ok(q) => q.value,
            Err(e) => {
                first_error.get_or_insert(e);
                f64::NAN
            }
        },
        &BracketSpec::new(SHAPE_RANGE.0.ln(), SHAPE_RANGE.1.ln()).tolerance(1e-7),
    )?;
    let delta = m.argmax.exp();
    let at_max = match w_log_likelihood(delta, w, spec) {
        Ok(q) => q,
        Err(e) => return Err(first_error.unwrap_or(e)),
    };
    Ok(ShapeEstimate {
        delta,
        boundary: m.boundary,
        loglik: at_max.value,
        quadrature_error: at_max.error,
        evaluations: m.evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationScale {
    pub gamma_init: f64,
    pub beta_init: f64,
    pub gamma_corrected: f64,
    pub beta_corrected: f64,
}

/// `[mean((gamma - x)^delta)]^(1/delta)` from logs of the gaps.
fn power_mean_scale(s: &Sample, gamma: f64, delta: f64) -> f64 {
    let terms: Vec<f64> = s.values().iter().map(|&x| delta * (gamma - x).ln()).collect();
    ((log_sum_exp(&terms) - (s.n() as f64).ln()) / delta).exp()
}

/// Location from the sample maximum plus the expected gap
/// `beta * Gamma(1 + 1/delta) * n^(-1/delta)`, and scale as a power mean.
pub fn estimate_location_scale(s: &Sample, delta_hat: f64) -> LocationScale {
    let n = s.n() as f64;
    let gamma_init = s.max();
    let beta_init = power_mean_scale(s, gamma_init, delta_hat);
    let gamma_corrected = gamma_init + beta_init * gamma_fn(1.0 + 1.0 / delta_hat) * n.powf(-1.0 / delta_hat);
    let beta_corrected = power_mean_scale(s, gamma_corrected, delta_hat);
    LocationScale {
        gamma_init,
        beta_init,
        gamma_corrected,
        beta_corrected,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LspfeDiagnostics {
    pub delta_hat: f64,
    pub gamma_init: f64,
    pub beta_init: f64,
    pub gamma_corrected: f64,
    pub beta_corrected: f64,
    pub loglik_at_max: f64,
    pub quadrature_error: f64,
    pub bracket_boundary: bool,
    pub ties_adjusted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LspfeFit {
    pub result: EstimationResult,
    pub diagnostics: LspfeDiagnostics,
}

pub fn fit_lspfe(s: &Sample, spec: &QuadratureSpec) -> Result<LspfeFit> {
    s.require_estimable()?;
    let (s, ties) = if s.distinct() < s.n() {
        let (jittered, k) = s.break_ties(TIE_JITTER);
        log::warn!("{k} tied observations offset by multiples of {TIE_JITTER} x spread");
        (jittered, k)
    } else {
        (s.clone(), 0)
    };
    let w = compute_w(&s)?;
    let shape = estimate_shape(&w, spec)?;
    let ls = estimate_location_scale(&s, shape.delta);
    let params = RwParams::new(shape.delta, ls.beta_corrected, ls.gamma_corrected)?;
    let mut notes = vec!["location correction uses Gamma(1 + 1/delta) * n^(-1/delta)".to_string()];
    if ties > 0 {
        notes.push(format!("{ties} tied observations separated by {TIE_JITTER} x spread"));
    }
    if shape.boundary {
        notes.push(format!(
            "shape estimate at the end of the search interval [{}, {}]",
            SHAPE_RANGE.0, SHAPE_RANGE.1
        ));
    }
    Ok(LspfeFit {
        result: EstimationResult {
            method: Method::Lspfe,
            params,
            log_likelihood: Some(shape.loglik),
            converged: !shape.boundary,
            boundary_hit: shape.boundary,
            iterations: shape.evaluations,
            notes: notes.join("; "),
        },
        diagnostics: LspfeDiagnostics {
            delta_hat: shape.delta,
            gamma_init: ls.gamma_init,
            beta_init: ls.beta_init,
            gamma_corrected: ls.gamma_corrected,
            beta_corrected: ls.beta_corrected,
            loglik_at_max: shape.loglik,
            quadrature_error: shape.quadrature_error,
            bracket_boundary: shape.boundary,
            ties_adjusted: ties,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample;

    fn w_of(values: &[f64]) -> WStats {
        compute_w(&Sample::new(values.to_vec()).unwrap()).unwrap()
    }

    fn bearing() -> Sample {
        Sample::new(vec![
            -422.6, -262.6, -234.9, -216.5, -204.7, -193.0, -173.3, -172.5, -172.0, -152.7,
        ])
        .unwrap()
    }

    #[test]
    fn w_examples() {
        assert_eq!(w_of(&[-3.0, -2.0, -1.0]).w, vec![0.0, 0.5, 1.0]);
        let w = compute_w(&bearing()).unwrap();
        assert_eq!((w.w[0], w.w[9]), (0.0, 1.0));
        assert!((w.w[1] - 160.0 / 269.9).abs() < 1e-12);
        assert!((w.w[1] - 0.59281).abs() < 1e-5);
    }

    #[test]
    fn w_is_affine_invariant() {
        let s = sample(30, &RwParams::new(1.5, 2.0, 0.0).unwrap(), 4);
        let a = compute_w(&s).unwrap();
        let b = compute_w(&s.map(|x| 8.0 * x + 3.0).unwrap()).unwrap();
        for (x, y) in a.w.iter().zip(&b.w) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn three_point_exponential_density_closed_form() {
        // for shape 1 the middle statistic has density 2 / (2 - w)^2
        let spec = QuadratureSpec::default();
        for w2 in [0.0, 0.1, 0.5, 0.9, 0.999] {
            let w = WStats { w: vec![0.0, w2, 1.0], n: 3, spread: 1.0 };
            let q = w_log_likelihood(1.0, &w, &spec).unwrap();
            let exact = (2.0 / (2.0 - w2).powi(2)).ln();
            assert!((q.value - exact).abs() < 1e-6, "{w2}: {} vs {exact}", q.value);
            assert!(q.error < 1e-4);
        }
    }

    #[test]
    fn same_w_same_likelihood() {
        let spec = QuadratureSpec::default();
        let a = w_of(&[-5.0, -4.0, -2.5, -1.0]);
        let b = w_of(&[10.0, 12.0, 15.0, 18.0]);
        assert_eq!(a.w, b.w);
        let la = w_log_likelihood(1.7, &a, &spec).unwrap();
        let lb = w_log_likelihood(1.7, &b, &spec).unwrap();
        assert_eq!(la.value.to_bits(), lb.value.to_bits());
    }

    #[test]
    fn shape_out_of_range() {
        let w = w_of(&[0.0, 1.0, 3.0]);
        assert!(matches!(
            w_log_likelihood(2e3, &w, &QuadratureSpec::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let spec = QuadratureSpec::with_relative(1e-10);
        for (i, delta) in [0.3, 0.8, 1.0, 2.2, 6.0].into_iter().enumerate() {
            let s = sample(8 + 3 * i, &RwParams::new(delta, 1.0, 0.0).unwrap(), 40 + i as u64);
            let w = compute_w(&s).unwrap();
            let h = 1e-4 * delta;
            let up = w_log_likelihood(delta + h, &w, &spec).unwrap().value;
            let dn = w_log_likelihood(delta - h, &w, &spec).unwrap().value;
            let fd = (up - dn) / (2.0 * h);
            let d = w_log_likelihood_derivative(delta, &w, &spec).unwrap();
            assert!((d - fd).abs() <= 1e-3 * d.abs().max(1.0), "{delta}: {d} vs {fd}");
        }
    }

    #[test]
    fn location_scale_example() {
        let s = Sample::new(vec![-3.0, -2.0, -1.0]).unwrap();
        let ls = estimate_location_scale(&s, 1.0);
        assert_eq!(ls.gamma_init, -1.0);
        assert!((ls.beta_init - 1.0).abs() < 1e-14);
        assert!((ls.gamma_corrected + 2.0 / 3.0).abs() < 1e-14);
        assert!((ls.beta_corrected - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn location_correction_shrinks_with_n() {
        let term = |n: f64| 10.0 * gamma_fn(1.5) * n.powf(-0.5);
        assert!((term(20.0) / term(80.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn small_shape_location_scale_has_no_singularity() {
        let s = Sample::new(vec![-9.0, -4.0, -2.0, -1.0]).unwrap();
        let ls = estimate_location_scale(&s, 0.4);
        assert!(ls.beta_init.is_finite() && ls.beta_init > 0.0);
        assert!(ls.gamma_corrected > ls.gamma_init && ls.beta_corrected > ls.beta_init);
    }

    #[test]
    fn fit_is_affine_equivariant() {
        let spec = QuadratureSpec::default();
        let s = sample(15, &RwParams::new(2.0, 10.0, 0.0).unwrap(), 12);
        let a = fit_lspfe(&s, &spec).unwrap().result.params;
        let b = fit_lspfe(&s.map(|x| 3.0 * x + 100.0).unwrap(), &spec).unwrap().result.params;
        let e = a.affine(3.0, 100.0);
        assert!((a.delta - b.delta).abs() <= 1e-6 * a.delta);
        assert!((b.beta - e.beta).abs() <= 1e-5 * e.beta);
        assert!((b.gamma - e.gamma).abs() <= 1e-5 * e.beta);
    }

    #[test]
    fn ties_are_separated() {
        let s = Sample::new(vec![-5.0, -3.0, -3.0, -2.0, -1.0, -1.0]).unwrap();
        let fit = fit_lspfe(&s, &QuadratureSpec::default()).unwrap();
        assert_eq!(fit.diagnostics.ties_adjusted, 2);
        assert!(fit.result.params.gamma > -1.0);
    }
}
