//! Goodness-of-fit and rank statistics used by calibration diagnostics.

/// One-sample Kolmogorov–Smirnov statistic `sup |F_n − F|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Kendall's τ-a of paired observations.
pub fn kendall_tau(pairs: &[[f64; 2]]) -> f64 {
    let n = pairs.len();
    if n < 2 {
        return 0.0;
    }
    let mut score: i64 = 0;
    for i in 0..n {
        let [xi, yi] = pairs[i];
        for &[xj, yj] in &pairs[i + 1..] {
            let s = (xi - xj) * (yi - yj);
            if s > 0.0 {
                score += 1;
            } else if s < 0.0 {
                score -= 1;
            }
        }
    }
    score as f64 / (n * (n - 1) / 2) as f64
}
