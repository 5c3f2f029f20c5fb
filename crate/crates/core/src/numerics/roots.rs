use crate::error::{Error, Result};

use super::BracketSpec;

/// Brent-Dekker root finder (bisection, secant and inverse quadratic
/// interpolation). Requires a sign change on the bracket.
pub fn find_root_bracketed(mut f: impl FnMut(f64) -> f64, bracket: &BracketSpec) -> Result<f64> {
    bracket.validate()?;
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || (fa > 0.0) == (fb > 0.0) {
        return Err(Error::Bracket {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..bracket.max_iterations {
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * bracket.x_tolerance(b);
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() && fa.is_finite() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::Convergence {
                what: "root finder",
                value: b,
                error: (c - b).abs(),
            });
        }
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Err(Error::Convergence {
        what: "root finder",
        value: b,
        error: (c - b).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight(lo: f64, hi: f64) -> BracketSpec {
        BracketSpec::new(lo, hi).tolerance(1e-13)
    }

    #[test]
    fn linear_and_quadratic() {
        assert!((find_root_bracketed(|x| x - 1.0, &tight(0.0, 2.0)).unwrap() - 1.0).abs() < 1e-12);
        let r = find_root_bracketed(|x| x * x - 2.0, &tight(0.0, 2.0)).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn endpoint_root() {
        assert_eq!(find_root_bracketed(|x| x, &tight(0.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn no_sign_change() {
        let err = find_root_bracketed(|x| x * x + 1.0, &tight(-1.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn infinite_endpoint_values_are_usable() {
        let r = find_root_bracketed(|x| 1.0 / x - 2.0, &tight(0.0, 1.0)).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
    }
}
