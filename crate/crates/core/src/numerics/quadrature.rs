//! Adaptive 21-point Gauss-Kronrod quadrature with bisection of the worst
//! interval. Infinite limits are removed with `x = b - t / (1 - t)` (and its
//! mirror images), so every integral is evaluated over a finite range.

use crate::error::{Error, Result};

use super::QuadratureSpec;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_634_200,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// 10-point Gauss weights for the odd-indexed XGK nodes
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

/// Integral of `f` over `[a, b]`; either limit may be infinite.
pub fn integrate_1d(f: impl Fn(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Quadrature> {
    spec.validate()?;
    match integrate_vec(
        |x| [f(x)],
        a,
        b,
        spec.relative_tolerance,
        [spec.absolute_tolerance],
        spec.max_subdivisions,
    ) {
        Ok((v, e)) => Ok(Quadrature { value: v[0], error: e[0] }),
        Err(fail) => Err(Error::Convergence {
            what: "adaptive quadrature",
            value: fail.value[0],
            error: fail.error[0],
        }),
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadFailure<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
    splittable: bool,
}

fn gauss_kronrod<const N: usize>(f: &mut impl FnMut(f64) -> [f64; N], a: f64, b: f64) -> Panel<N> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv1 = [[0.0; N]; 10];
    let mut fv2 = [[0.0; N]; 10];
    let fc = f(center);
    let mut resk = [0.0; N];
    let mut resg = [0.0; N];
    let mut resabs = [0.0; N];
    for k in 0..N {
        resk[k] = WGK[10] * fc[k];
        resabs[k] = resk[k].abs();
    }
    for j in 0..5 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for k in 0..N {
            resg[k] += WG[j] * (f1[k] + f2[k]);
            resk[k] += WGK[jtw] * (f1[k] + f2[k]);
            resabs[k] += WGK[jtw] * (f1[k].abs() + f2[k].abs());
        }
        fv1[jtw] = f1;
        fv2[jtw] = f2;
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        for k in 0..N {
            resk[k] += WGK[jtwm1] * (f1[k] + f2[k]);
            resabs[k] += WGK[jtwm1] * (f1[k].abs() + f2[k].abs());
        }
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
    }
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for k in 0..N {
        let mean = 0.5 * resk[k];
        let mut resasc = WGK[10] * (fc[k] - mean).abs();
        for j in 0..10 {
            resasc += WGK[j] * ((fv1[j][k] - mean).abs() + (fv2[j][k] - mean).abs());
        }
        value[k] = resk[k] * half;
        error[k] = rescale_error((resk[k] - resg[k]) * half, resabs[k] * half.abs(), resasc * half.abs());
        if !value[k].is_finite() {
            error[k] = f64::INFINITY;
        }
    }
    // stop splitting once the panel is at the resolution of the abscissae
    let splittable = (b - a).abs() > 1e3 * f64::EPSILON * (a.abs() + b.abs()).max(f64::MIN_POSITIVE);
    Panel { a, b, value, error, splittable }
}

/// Vector-valued adaptive integration. Component `k` has converged when its
/// error estimate is below `max(abs_tol[k], rel_tol * |I_k|)`; the panel with
/// the largest error relative to that target is bisected next. A component
/// whose `abs_tol` is infinite is integrated along but never drives
/// refinement.
pub(crate) fn integrate_vec<const N: usize>(
    mut f: impl FnMut(f64) -> [f64; N],
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: [f64; N],
    max_subdivisions: usize,
) -> Result<([f64; N], [f64; N]), QuadFailure<N>> {
    if a == b {
        return Ok(([0.0; N], [0.0; N]));
    }
    if a > b {
        return integrate_vec(f, b, a, rel_tol, abs_tol, max_subdivisions).map(|(v, e)| (v.map(|x| -x), e)).map_err(
            |fail| QuadFailure {
                value: fail.value.map(|x| -x),
                error: fail.error,
            },
        );
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adapt(&mut f, a, b, rel_tol, abs_tol, max_subdivisions),
        (false, true) => {
            let mut g = |t: f64| {
                let s = 1.0 - t;
                let w = 1.0 / (s * s);
                f(b - t / s).map(|v| if v == 0.0 { 0.0 } else { v * w })
            };
            adapt(&mut g, 0.0, 1.0, rel_tol, abs_tol, max_subdivisions)
        }
        (true, false) => {
            let mut g = |t: f64| {
                let s = 1.0 - t;
                let w = 1.0 / (s * s);
                f(a + t / s).map(|v| if v == 0.0 { 0.0 } else { v * w })
            };
            adapt(&mut g, 0.0, 1.0, rel_tol, abs_tol, max_subdivisions)
        }
        (false, false) => {
            let mut g = |t: f64| {
                let s = 1.0 - t;
                let w = 1.0 / (s * s);
                let x = t / s;
                let lo = f(-x);
                let hi = f(x);
                let mut out = [0.0; N];
                for k in 0..N {
                    let v = lo[k] + hi[k];
                    out[k] = if v == 0.0 { 0.0 } else { v * w };
                }
                out
            };
            adapt(&mut g, 0.0, 1.0, rel_tol, abs_tol, max_subdivisions)
        }
    }
}

fn adapt<const N: usize>(
    f: &mut impl FnMut(f64) -> [f64; N],
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: [f64; N],
    max_subdivisions: usize,
) -> Result<([f64; N], [f64; N]), QuadFailure<N>> {
    let mut panels = vec![gauss_kronrod(f, a, b)];
    loop {
        let mut total = [0.0; N];
        let mut err = [0.0; N];
        for p in &panels {
            for k in 0..N {
                total[k] += p.value[k];
                err[k] += p.error[k];
            }
        }
        let target: [f64; N] = std::array::from_fn(|k| abs_tol[k].max(rel_tol * total[k].abs()));
        if (0..N).all(|k| err[k] <= target[k]) {
            return Ok((total, err));
        }
        if total.iter().any(|v| v.is_nan()) || panels.len() >= max_subdivisions {
            return Err(QuadFailure { value: total, error: err });
        }
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.splittable)
            .map(|(i, p)| {
                let badness = (0..N)
                    .map(|k| if target[k].is_finite() { p.error[k] / target[k] } else { 0.0 })
                    .fold(0.0, f64::max);
                (i, badness)
            })
            .max_by(|x, y| x.1.total_cmp(&y.1));
        let Some((i, _)) = worst else {
            return Err(QuadFailure { value: total, error: err });
        };
        let p = panels.swap_remove(i);
        let mid = 0.5 * (p.a + p.b);
        panels.push(gauss_kronrod(f, p.a, mid));
        panels.push(gauss_kronrod(f, mid, p.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn finite_interval() {
        let q = integrate_1d(|x| x, 0.0, 1.0, &spec()).unwrap();
        assert!((q.value - 0.5).abs() < 1e-14);
        let q = integrate_1d(|x| x.sin(), 0.0, std::f64::consts::PI, &spec()).unwrap();
        assert!((q.value - 2.0).abs() < 1e-12);
        let rev = integrate_1d(|x| x, 1.0, 0.0, &spec()).unwrap();
        assert!((rev.value + 0.5).abs() < 1e-14);
    }

    #[test]
    fn semi_infinite_lower() {
        let q = integrate_1d(f64::exp, f64::NEG_INFINITY, 0.0, &spec()).unwrap();
        assert!((q.value - 1.0).abs() < 1e-6);
        assert!(q.error < 1e-6);
    }

    #[test]
    fn reflected_weibull_density_normalizes() {
        for delta in [0.5, 2.0, 5.0] {
            let g = move |z: f64| {
                if z >= 0.0 {
                    return 0.0;
                }
                let y: f64 = -z;
                delta * y.powf(delta - 1.0) * (-y.powf(delta)).exp()
            };
            let q = integrate_1d(g, f64::NEG_INFINITY, 0.0, &spec()).unwrap();
            assert!((q.value - 1.0).abs() < 1e-6, "delta {delta}: {}", q.value);
        }
    }

    #[test]
    fn whole_line_and_upper_infinite() {
        let q = integrate_1d(|x| (-x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, &spec()).unwrap();
        assert!((q.value - std::f64::consts::PI.sqrt()).abs() < 1e-8);
        let q = integrate_1d(|x| (-x).exp(), 2.0, f64::INFINITY, &spec()).unwrap();
        assert!((q.value - (-2f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn non_convergence_is_reported() {
        let tight = QuadratureSpec {
            relative_tolerance: 1e-14,
            absolute_tolerance: 1e-300,
            max_subdivisions: 10,
        };
        let err = integrate_1d(|x| (1.0 / x).sin(), 1e-6, 1.0, &tight).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }));
    }

    #[test]
    fn vector_components_share_nodes() {
        let (v, _) = integrate_vec(|x| [x, x * x], 0.0, 3.0, 1e-10, [1e-14, 1e-14], 100).unwrap();
        assert!((v[0] - 4.5).abs() < 1e-12 && (v[1] - 9.0).abs() < 1e-12);
    }

    // x^k e^{-c x} on (0, inf) and x^k e^{c x} on (-inf, 0)
    proptest! {
        #![proptest_config(ProptestConfig::with_cases(30))]
        #[test]
        fn polynomial_times_exponential(k in 0u32..6, c in 0.2f64..5.0, lower in proptest::bool::ANY) {
            let exact = (1..=k).map(f64::from).product::<f64>() / c.powi(k as i32 + 1);
            let q = if lower {
                integrate_1d(move |x| (-x).powi(k as i32) * (c * x).exp(), f64::NEG_INFINITY, 0.0, &spec()).unwrap()
            } else {
                integrate_1d(move |x| x.powi(k as i32) * (-c * x).exp(), 0.0, f64::INFINITY, &spec()).unwrap()
            };
            prop_assert!((q.value - exact).abs() <= 1e-6 * exact.abs().max(1e-12), "{} vs {}", q.value, exact);
        }
    }
}
