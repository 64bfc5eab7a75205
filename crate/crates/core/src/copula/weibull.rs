use serde::{Deserialize, Serialize};

use super::CopulaError;
use crate::special::gamma;

/// Two-parameter Weibull law for the reference-height mean speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullMarginal {
    pub scale: f64,
    pub shape: f64,
}

impl WeibullMarginal {
    pub fn new(scale: f64, shape: f64) -> Result<Self, CopulaError> {
        if !(scale > 0.0 && scale.is_finite() && shape > 0.0 && shape.is_finite()) {
            return Err(CopulaError::Argument(format!("invalid Weibull parameters λ={scale}, k={shape}")));
        }
        Ok(Self { scale, shape })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-(x / self.scale).powf(self.shape)).exp_m1()
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let t = x / self.scale;
        self.shape.ln() - self.scale.ln() + (self.shape - 1.0) * t.ln() - t.powf(self.shape)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Closed-form inverse CDF, `λ(−ln(1−p))^{1/k}`.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        self.scale * (-(-p).ln_1p()).powf(1.0 / self.shape)
    }

    pub fn mean(&self) -> f64 {
        self.scale * gamma(1.0 + 1.0 / self.shape)
    }

    pub fn log_likelihood(&self, xs: &[f64]) -> f64 {
        xs.iter().map(|&x| self.ln_pdf(x)).sum()
    }

    /// Gradient `(∂ℓ/∂λ, ∂ℓ/∂k)` of the log-likelihood.
    pub fn log_likelihood_gradient(&self, xs: &[f64]) -> [f64; 2] {
        let (lam, k) = (self.scale, self.shape);
        let n = xs.len() as f64;
        let mut s_pow = 0.0;
        let mut s_log = 0.0;
        let mut s_pow_log = 0.0;
        for &x in xs {
            let l = (x / lam).ln();
            let p = (k * l).exp();
            s_pow += p;
            s_log += l;
            s_pow_log += p * l;
        }
        [k / lam * (s_pow - n), n / k + s_log - s_pow_log]
    }
}

/// Result of a Weibull maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeibullFit {
    pub marginal: WeibullMarginal,
    pub dropped_zeros: usize,
    pub log_likelihood: f64,
}

/// Maximum-likelihood Weibull fit.
///
/// The shape solves the profile-likelihood equation
/// `Σ x^k ln x / Σ x^k − 1/k − mean(ln x) = 0` (monotone in `k`) by safeguarded
/// Newton iteration; the scale follows in closed form. Zero speeds are dropped
/// and counted.
pub fn fit_weibull(speeds: &[f64]) -> Result<WeibullFit, CopulaError> {
    if let Some(bad) = speeds.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(CopulaError::Argument(format!("speed {bad} is not a finite non-negative value")));
    }
    let xs: Vec<f64> = speeds.iter().copied().filter(|&x| x > 0.0).collect();
    let dropped_zeros = speeds.len() - xs.len();
    if xs.len() < 10 {
        return Err(CopulaError::Fit(format!(
            "Weibull fit needs at least 10 positive samples, got {}",
            xs.len()
        )));
    }
    let max = xs.iter().copied().fold(f64::MIN, f64::max);
    let min = xs.iter().copied().fold(f64::MAX, f64::min);
    if max - min <= 1e-12 * max {
        return Err(CopulaError::Fit("degenerate speed data (all samples equal)".into()));
    }
    // work with y = x/max so that y^k never overflows
    let logs: Vec<f64> = xs.iter().map(|&x| (x / max).ln()).collect();
    let n = logs.len() as f64;
    let mean_log = logs.iter().sum::<f64>() / n;

    let profile = |k: f64| -> (f64, f64) {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &l in &logs {
            let p = (k * l).exp();
            s0 += p;
            s1 += p * l;
            s2 += p * l * l;
        }
        let g = s1 / s0 - 1.0 / k - mean_log;
        let dg = (s2 * s0 - s1 * s1) / (s0 * s0) + 1.0 / (k * k);
        (g, dg)
    };

    let (mut lo, mut hi) = (1e-3, 1.0);
    while profile(hi).0 < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(CopulaError::Fit("Weibull shape diverged".into()));
        }
    }
    while profile(lo).0 > 0.0 {
        lo *= 0.5;
        if lo < 1e-12 {
            return Err(CopulaError::Fit("Weibull shape collapsed to zero".into()));
        }
    }
    let mut k = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (g, dg) = profile(k);
        if g > 0.0 {
            hi = k;
        } else {
            lo = k;
        }
        let mut next = k - g / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - k).abs() <= 1e-15 * k || hi - lo <= 1e-15 * k {
            k = next;
            break;
        }
        k = next;
    }
    let mean_pow = logs.iter().map(|&l| (k * l).exp()).sum::<f64>() / n;
    let scale = max * mean_pow.powf(1.0 / k);
    let marginal = WeibullMarginal::new(scale, k)?;
    Ok(WeibullFit {
        marginal,
        dropped_zeros,
        log_likelihood: marginal.log_likelihood(&xs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp, Weibull};

    #[test]
    fn recovers_parameters_from_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = Weibull::new(10.0, 2.0).unwrap();
        let xs: Vec<f64> = (0..10_000).map(|_| d.sample(&mut rng)).collect();
        let fit = fit_weibull(&xs).unwrap();
        assert!((9.5..=10.5).contains(&fit.marginal.scale), "{:?}", fit);
        assert!((1.9..=2.1).contains(&fit.marginal.shape), "{:?}", fit);
        let g = fit.marginal.log_likelihood_gradient(&xs);
        assert!(g[0].abs() < 1e-8 * xs.len() as f64 && g[1].abs() < 1e-8 * xs.len() as f64, "{g:?}");
    }

    #[test]
    fn exponential_data_has_unit_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let d = Exp::new(0.25).unwrap();
        let xs: Vec<f64> = (0..10_000).map(|_| d.sample(&mut rng)).collect();
        let fit = fit_weibull(&xs).unwrap();
        assert!((0.95..=1.05).contains(&fit.marginal.shape), "{:?}", fit);
    }

    #[test]
    fn degenerate_and_sparse_data_fail() {
        assert!(matches!(fit_weibull(&[3.0; 50]), Err(CopulaError::Fit(_))));
        assert!(matches!(fit_weibull(&[0.0; 50]), Err(CopulaError::Fit(_))));
        assert!(matches!(fit_weibull(&[1.0, 2.0, 3.0]), Err(CopulaError::Fit(_))));
        assert!(matches!(fit_weibull(&[1.0, -2.0]), Err(CopulaError::Argument(_))));
    }

    #[test]
    fn zeros_are_dropped_and_counted() {
        let mut xs: Vec<f64> = (1..=40).map(|i| i as f64 * 0.37).collect();
        xs.extend([0.0, 0.0, 0.0]);
        let fit = fit_weibull(&xs).unwrap();
        assert_eq!(fit.dropped_zeros, 3);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let w = WeibullMarginal::new(7.5, 1.7).unwrap();
        for i in 1..200 {
            let p = i as f64 / 200.0;
            assert!((w.cdf(w.quantile(p)) - p).abs() < 1e-9);
        }
        assert_eq!(w.cdf(0.0), 0.0);
        assert!((w.mean() - 7.5 * gamma(1.0 + 1.0 / 1.7)).abs() < 1e-12);
    }
}
