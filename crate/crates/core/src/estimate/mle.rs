//! Maximum likelihood estimation.
//!
//! The location is parameterized as `gamma = X_(n) + exp(t)`, which keeps
//! every iterate feasible. For fixed `gamma` the scale has the closed form
//! `beta^delta = mean((gamma - x)^delta)` and the shape solves a monotone
//! equation, so the search reduces to maximizing a profile likelihood in `t`.
//!
//! When the shape falls below 1 the likelihood is unbounded as `gamma`
//! approaches the sample maximum. The search therefore stops at
//! `gamma = X_(n) + boundary_fraction * spread` and reports the boundary.

use serde::{Deserialize, Serialize};

use super::{mme, EstimationResult, Method};
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::model::RwParams;
use crate::numerics::{find_root_bracketed, maximize_unimodal, BracketSpec};

/// Shape interval for the profile equation.
const SHAPE_RANGE: (f64, f64) = (1e-4, 1e4);

/// Log-likelihood; `-inf` when any observation is at or above `gamma`.
pub fn log_likelihood(p: &RwParams, s: &Sample) -> f64 {
    if s.max() >= p.gamma {
        return f64::NEG_INFINITY;
    }
    let n = s.n() as f64;
    let mut sum_ln = 0.0;
    let mut sum_pow = 0.0;
    for &x in s.values() {
        let ln_z = ((p.gamma - x) / p.beta).ln();
        sum_ln += ln_z;
        sum_pow += (p.delta * ln_z).exp();
    }
    n * p.delta.ln() - n * p.beta.ln() + (p.delta - 1.0) * sum_ln - sum_pow
}

/// Gradient of the log-likelihood as `(d/d delta, d/d beta, d/d gamma)`.
pub fn score(p: &RwParams, s: &Sample) -> (f64, f64, f64) {
    let n = s.n() as f64;
    let (d, b) = (p.delta, p.beta);
    let (mut sum_ln, mut sum_pow_ln, mut sum_pow, mut sum_inv, mut sum_pow_m1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &x in s.values() {
        let y = p.gamma - x;
        let ln_z = (y / b).ln();
        let zd = (d * ln_z).exp();
        sum_ln += ln_z;
        sum_pow_ln += zd * ln_z;
        sum_pow += zd;
        sum_inv += 1.0 / y;
        sum_pow_m1 += ((d - 1.0) * ln_z).exp();
    }
    let d_delta = n / d + sum_ln - sum_pow_ln;
    let d_beta = -n * d / b + d / b * sum_pow;
    let d_gamma = (d - 1.0) * sum_inv - d / b * sum_pow_m1;
    (d_delta, d_beta, d_gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    /// `gamma - X_(n)` is kept at or above this multiple of the spread.
    pub boundary_fraction: f64,
    /// `gamma - X_(n)` is kept at or below this multiple of the spread.
    pub max_location_fraction: f64,
    /// Argument tolerance of the search in `t = ln(gamma - X_(n))`.
    pub tolerance: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            boundary_fraction: 1e-12,
            max_location_fraction: 1e4,
            tolerance: 1e-10,
        }
    }
}

impl MleOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.boundary_fraction > 0.0 && self.boundary_fraction < self.max_location_fraction) {
            return Err(Error::InvalidParameter(
                "MLE location limits need 0 < boundary_fraction < max_location_fraction".into(),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("MLE tolerance must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct ProfilePoint {
    loglik: f64,
    delta: f64,
    beta: f64,
    shape_clamped: bool,
}

/// Likelihood maximized over shape and scale for `gamma = X_(n) + exp(t)`.
struct Profile<'a> {
    s: &'a Sample,
    evaluations: usize,
}

impl Profile<'_> {
    fn at(&mut self, t: f64) -> ProfilePoint {
        self.evaluations += 1;
        let s = self.s;
        let n = s.n() as f64;
        let eps = t.exp();
        let ln_y: Vec<f64> = s.values().iter().map(|&x| (eps + (s.max() - x)).ln()).collect();
        let ln_ymax = ln_y[0];
        // shifted logs are <= 0; the shape equation is invariant to the shift
        let r: Vec<f64> = ln_y.iter().map(|&l| l - ln_ymax).collect();
        let mean_r = r.iter().sum::<f64>() / n;
        let equation = |u: f64| {
            let d = u.exp();
            let (mut sw, mut swr) = (0.0, 0.0);
            for &ri in &r {
                let w = (d * ri).exp();
                sw += w;
                swr += w * ri;
            }
            1.0 / d + mean_r - swr / sw
        };
        let (lo, hi) = (SHAPE_RANGE.0.ln(), SHAPE_RANGE.1.ln());
        let (u, shape_clamped) = if equation(hi) >= 0.0 {
            (hi, true)
        } else {
            match find_root_bracketed(equation, &BracketSpec::new(lo, hi).tolerance(1e-13)) {
                Ok(u) => (u, false),
                Err(_) => (lo, true),
            }
        };
        let delta = u.exp();
        let mean_pow = r.iter().map(|&ri| (delta * ri).exp()).sum::<f64>() / n;
        let ln_beta = ln_ymax + mean_pow.ln() / delta;
        let sum_ln_y = ln_y.iter().sum::<f64>();
        let loglik = n * delta.ln() - n * delta * ln_beta + (delta - 1.0) * sum_ln_y - n;
        ProfilePoint {
            loglik,
            delta,
            beta: ln_beta.exp(),
            shape_clamped,
        }
    }
}

struct Climb {
    t: f64,
    point: ProfilePoint,
    at_lower: bool,
    at_upper: bool,
}

/// Walk uphill from `t0` with doubling steps until the profile turns down or
/// a limit is reached, then refine inside the bracket.
fn climb(profile: &mut Profile, t0: f64, limits: (f64, f64), tol: f64) -> Result<Climb> {
    let value = |p: &mut Profile, t: f64| {
        let v = p.at(t).loglik;
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let (t_lo, t_hi) = limits;
    let t0 = t0.clamp(t_lo, t_hi);
    let h = 0.5;
    let f0 = value(profile, t0);
    let up = (t0 + h).min(t_hi);
    let down = (t0 - h).max(t_lo);
    let (f_up, f_down) = (value(profile, up), value(profile, down));
    let (a, b) = if f_up <= f0 && f_down <= f0 {
        (down, up)
    } else {
        let dir = if f_up > f_down { 1.0 } else { -1.0 };
        let limit = if dir > 0.0 { t_hi } else { t_lo };
        let (mut prev, mut cur) = if dir > 0.0 { (t0, up) } else { (t0, down) };
        let mut f_cur = f_up.max(f_down);
        let mut step = 2.0 * h;
        loop {
            if cur == limit {
                break (prev.min(cur), prev.max(cur));
            }
            let next = if dir > 0.0 { (cur + step).min(limit) } else { (cur - step).max(limit) };
            let f_next = value(profile, next);
            if f_next < f_cur {
                break (prev.min(next), prev.max(next));
            }
            prev = cur;
            cur = next;
            f_cur = f_next;
            step *= 2.0;
        }
    };
    let m = maximize_unimodal(
        |t| profile.at(t).loglik,
        &BracketSpec::new(a, b).tolerance(tol).max_iterations(500),
    )?;
    let edge = 3.0 * tol * m.argmax.abs().max(1.0);
    Ok(Climb {
        t: m.argmax,
        point: profile.at(m.argmax),
        at_lower: (m.argmax - t_lo).abs() <= edge,
        at_upper: (t_hi - m.argmax).abs() <= edge,
    })
}

pub fn fit_mle(s: &Sample, options: &MleOptions) -> Result<EstimationResult> {
    s.require_estimable()?;
    options.validate()?;
    let spread = s.spread();
    let limits = (
        (options.boundary_fraction * spread).ln(),
        (options.max_location_fraction * spread).ln(),
    );
    let t_start = match mme::fit_mme(s) {
        Ok(fit) if fit.params.gamma > s.max() => (fit.params.gamma - s.max()).ln(),
        _ => (0.1 * spread).ln(),
    };

    let mut profile = Profile { s, evaluations: 0 };
    let mut climbs = Vec::new();
    for offset in [0.0, -1.5, 1.5, 3.0] {
        climbs.push(climb(&mut profile, t_start + offset, limits, options.tolerance)?);
    }
    let better = |a: &&Climb, b: &&Climb| a.point.loglik.total_cmp(&b.point.loglik);
    let interior = climbs.iter().filter(|c| !c.at_lower && !c.at_upper).max_by(better);
    let best = interior.or_else(|| climbs.iter().max_by(better)).expect("at least one start");

    let gamma = s.max() + best.t.exp();
    let params = RwParams::new(best.point.delta, best.point.beta, gamma)?;
    let mut notes = Vec::new();
    if best.at_lower {
        notes.push(format!(
            "likelihood increases as the location approaches the sample maximum; search stopped at gamma - X_(n) = {:.3e} (likelihood unbounded there when shape < 1)",
            best.t.exp()
        ));
    }
    if best.at_upper {
        notes.push("location diverged upward to the search limit; the sample looks closer to the extreme-value limit".to_string());
    }
    if best.point.shape_clamped {
        notes.push(format!("profile shape clamped at {}", best.point.delta));
    }
    let boundary_hit = best.at_lower || best.at_upper;
    Ok(EstimationResult {
        method: Method::Mle,
        params,
        log_likelihood: Some(log_likelihood(&params, s)),
        converged: !boundary_hit && !best.point.shape_clamped,
        boundary_hit,
        iterations: profile.evaluations,
        notes: notes.join("; "),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ln_pdf, sample};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bearing() -> Sample {
        Sample::new(vec![
            -422.6, -262.6, -234.9, -216.5, -204.7, -193.0, -173.3, -172.5, -172.0, -152.7,
        ])
        .unwrap()
    }

    #[test]
    fn likelihood_examples() {
        let one = Sample::new(vec![-1.0]).unwrap();
        assert!((log_likelihood(&RwParams::new(1.0, 1.0, 0.0).unwrap(), &one) + 1.0).abs() < 1e-15);
        let two = Sample::new(vec![-2.0, -4.0]).unwrap();
        let ll = log_likelihood(&RwParams::new(1.0, 2.0, 0.0).unwrap(), &two);
        assert!((ll - (-2.0 * 2f64.ln() - 3.0)).abs() < 1e-12);
        let p = RwParams::new(1.0, 1.0, -1.0).unwrap();
        assert_eq!(log_likelihood(&p, &one), f64::NEG_INFINITY);
    }

    #[test]
    fn likelihood_is_sum_of_log_densities() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for i in 0..50 {
            let p = RwParams::new(rng.random_range(0.3..6.0), rng.random_range(0.5..20.0), rng.random_range(-10.0..10.0))
                .unwrap();
            let s = sample(rng.random_range(3..40), &p, i);
            let direct: f64 = s.values().iter().map(|&x| ln_pdf(x, &p)).sum();
            assert!((log_likelihood(&p, &s) - direct).abs() <= 1e-10 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn score_examples() {
        let one = Sample::new(vec![-1.0]).unwrap();
        let (dd, db, _) = score(&RwParams::new(1.0, 1.0, 0.0).unwrap(), &one);
        assert!((dd - 1.0).abs() < 1e-15);
        assert!(db.abs() < 1e-15);
    }

    #[test]
    fn score_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for i in 0..50 {
            let p = RwParams::new(rng.random_range(0.5..5.0), rng.random_range(1.0..10.0), 0.0).unwrap();
            let s = sample(rng.random_range(5..30), &p, 100 + i);
            // keep the location clear of the sample so the differences are smooth
            let p = RwParams { gamma: s.max() + rng.random_range(0.2..2.0) * p.beta, ..p };
            let (dd, db, dg) = score(&p, &s);
            let ll = |q: RwParams| log_likelihood(&q, &s);
            let fd = |f: &dyn Fn(f64) -> RwParams, x: f64| {
                let h = 1e-5 * x.abs().max(1.0);
                (ll(f(x + h)) - ll(f(x - h))) / (2.0 * h)
            };
            let fdd = fd(&|x| RwParams { delta: x, ..p }, p.delta);
            let fdb = fd(&|x| RwParams { beta: x, ..p }, p.beta);
            let fdg = fd(&|x| RwParams { gamma: x, ..p }, p.gamma);
            for (a, b) in [(dd, fdd), (db, fdb), (dg, fdg)] {
                assert!((a - b).abs() / a.abs().max(1.0) < 1e-5, "{i}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn large_sample_is_consistent() {
        let s = sample(5000, &RwParams::new(2.0, 10.0, 0.0).unwrap(), 20_240_501);
        let fit = fit_mle(&s, &MleOptions::default()).unwrap();
        assert!(fit.converged && !fit.boundary_hit, "{fit:?}");
        let p = fit.params;
        assert!((p.delta - 2.0).abs() < 0.1, "{p:?}");
        assert!((p.beta - 10.0).abs() < 0.3, "{p:?}");
        assert!(p.gamma.abs() < 0.3, "{p:?}");
    }

    #[test]
    fn interior_optimum_is_stationary() {
        let s = sample(400, &RwParams::new(3.0, 5.0, 2.0).unwrap(), 77);
        let fit = fit_mle(&s, &MleOptions::default()).unwrap();
        assert!(fit.converged, "{fit:?}");
        let (dd, db, dg) = score(&fit.params, &s);
        let n = s.n() as f64;
        assert!(dd.abs() < 1e-6 * n && db.abs() < 1e-6 * n && dg.abs() < 1e-4 * n, "{dd} {db} {dg}");
    }

    #[test]
    fn equivariant_under_affine_maps() {
        let s = sample(150, &RwParams::new(2.5, 3.0, 1.0).unwrap(), 31);
        let opts = MleOptions::default();
        let a = fit_mle(&s, &opts).unwrap().params;
        for (k, c) in [(1.0, 50.0), (4.0, -3.0), (0.1, 0.0)] {
            let b = fit_mle(&s.map(|x| k * x + c).unwrap(), &opts).unwrap().params;
            let e = a.affine(k, c);
            assert!((b.delta - e.delta).abs() <= 1e-4 * e.delta, "{b:?} vs {e:?}");
            assert!((b.beta - e.beta).abs() <= 1e-4 * e.beta, "{b:?} vs {e:?}");
            assert!((b.gamma - e.gamma).abs() <= 1e-4 * e.beta, "{b:?} vs {e:?}");
        }
    }

    #[test]
    fn bearing_data_runs_to_the_boundary() {
        let fit = fit_mle(&bearing(), &MleOptions::default()).unwrap();
        assert!(fit.boundary_hit && !fit.converged);
        assert!(!fit.notes.is_empty());
        let p = fit.params;
        assert!(p.delta > 0.2 && p.delta < 0.4, "{p:?}");
        assert!((p.gamma + 152.7).abs() < 1e-6, "{p:?}");
    }

    #[test]
    fn rejects_small_and_degenerate() {
        let opts = MleOptions::default();
        assert!(matches!(
            fit_mle(&Sample::new(vec![1.0, 2.0]).unwrap(), &opts),
            Err(Error::TooFewObservations { .. })
        ));
        assert!(matches!(
            fit_mle(&Sample::new(vec![1.0; 4]).unwrap(), &opts),
            Err(Error::DegenerateSample(_))
        ));
    }
}
