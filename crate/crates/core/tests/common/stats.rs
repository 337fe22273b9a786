use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Kolmogorov-Smirnov statistic and asymptotic p-value of `xs` against the
/// uniform distribution on `[lo, hi]`.
pub fn ks_uniform(mut xs: Vec<f64>, lo: f64, hi: f64) -> (f64, f64) {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-2.0 * k * k * lambda * lambda).exp();
        p += if k as u64 % 2 == 1 { term } else { -term };
    }
    (d, p.clamp(0.0, 1.0))
}

/// Pearson chi-square p-value of observed counts against equal expected
/// frequencies.
pub fn chi_square_uniform(counts: &[u64]) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    (stat, 1.0 - dist.cdf(stat))
}

/// Two-sided normal-approximation binomial test of `k` successes in `n`
/// trials against rate `p`.
pub fn binomial_two_sided(k: u64, n: u64, p: f64) -> (f64, f64) {
    let (k, n) = (k as f64, n as f64);
    let z = (k - n * p) / (n * p * (1.0 - p)).sqrt();
    let std = Normal::new(0.0, 1.0).unwrap();
    (z, 2.0 * (1.0 - std.cdf(z.abs())))
}
