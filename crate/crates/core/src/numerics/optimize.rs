use crate::error::Result;

use super::BracketSpec;

const GOLDEN: f64 = 0.381_966_011_250_105_1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub argmax: f64,
    pub max_value: f64,
    /// The maximizer lies within tolerance of `lo` or `hi`.
    pub boundary: bool,
    pub evaluations: usize,
}

/// Brent's derivative-free search (golden section with parabolic steps) for
/// the maximum of a unimodal `f` on `[lo, hi]`. `f` is only evaluated inside
/// the bracket; NaN values are treated as `-inf`.
pub fn maximize_unimodal(mut f: impl FnMut(f64) -> f64, bracket: &BracketSpec) -> Result<Maximum> {
    bracket.validate()?;
    let mut evaluations = 0;
    let mut neg = |x: f64| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            -v
        }
    };

    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = neg(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..bracket.max_iterations {
        let m = 0.5 * (a + b);
        let tol1 = bracket.x_tolerance(x);
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut parabolic = false;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            let e_prev = e;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                parabolic = true;
            }
        }
        if !parabolic {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let step = if d.abs() >= tol1 { d } else { tol1.copysign(d) };
        let u = (x + step).clamp(a, b);
        let fu = neg(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }

    let tol = 3.0 * bracket.x_tolerance(x);
    let mut boundary = false;
    for end in [bracket.lo, bracket.hi] {
        if (x - end).abs() <= tol {
            boundary = true;
            let fe = neg(end);
            if fe <= fx {
                x = end;
                fx = fe;
            }
        }
    }
    Ok(Maximum {
        argmax: x,
        max_value: -fx,
        boundary,
        evaluations,
    })
}
