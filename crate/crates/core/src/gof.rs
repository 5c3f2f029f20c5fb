//! Kolmogorov-Smirnov distance between a sample and a distribution function.

use crate::data::Sample;

/// `sup |F_n(x) - F(x)|` over the sample, checking both sides of every step.
pub fn ks_statistic(s: &Sample, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = s.n() as f64;
    s.values()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov tail probability `P(D_n >= d)` for a fully
/// specified distribution, with Stephens' small-sample adjustment. Not valid
/// when the parameters were estimated from the same sample.
pub fn kolmogorov_p_value(d: f64, n: usize) -> f64 {
    let rn = (n as f64).sqrt();
    let lambda = (rn + 0.12 + 0.11 / rn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += if j as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_distance() {
        let s = Sample::new(vec![0.1, 0.3, 0.5, 0.7, 0.9]).unwrap();
        let d = ks_statistic(&s, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.1).abs() < 1e-12);
        let d = ks_statistic(&s, |x| (x - 0.2).clamp(0.0, 1.0));
        assert!((d - 0.3).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_quantiles() {
        // critical values of the limiting distribution
        let q = |lambda: f64| kolmogorov_p_value(lambda / 1e4, 100_000_000);
        assert!((q(1.3581) - 0.05).abs() < 2e-4);
        assert!((q(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_p_value(0.0, 10), 1.0);
    }
}
