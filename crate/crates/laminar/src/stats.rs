//! Small statistics helpers: Kolmogorov–Smirnov statistics and
//! standardization, shared by the distribution checks and the comparison maps.

/// One-sample Kolmogorov–Smirnov statistic of `samples` against the CDF `cdf`.
///
/// D = sup_x |F_empirical(x) − F(x)|, evaluated at the jump points.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(
        !samples.is_empty(),
        "ks_statistic needs at least one sample"
    );
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// KS statistic against the Uniform(0, 1) distribution.
pub fn ks_uniform01(samples: &[f64]) -> f64 {
    ks_statistic(samples, |x| x.clamp(0.0, 1.0))
}

/// KS statistic against the standard normal.
pub fn ks_standard_normal(samples: &[f64]) -> f64 {
    ks_statistic(samples, crate::special::normal_cdf)
}

/// Arithmetic mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (divides by N).
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Subtract the mean and divide by the population standard deviation.
///
/// A zero standard deviation leaves the centered values unscaled.
pub fn standardize(xs: &[f64]) -> Vec<f64> {
    let m = mean(xs);
    let s = std_dev(xs);
    let denom = if s > 0.0 { s } else { 1.0 };
    xs.iter().map(|x| (x - m) / denom).collect()
}

/// Median of a sample (averages the middle pair for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty());
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// p-th quantile by linear interpolation of the order statistics, p in [0, 1].
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    assert!(!xs.is_empty() && (0.0..=1.0).contains(&p));
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    v[lo] * (1.0 - frac) + v[hi] * frac
}
