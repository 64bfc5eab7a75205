//! Time and ensemble averages, variance estimators, VaR and CVaR.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{positive_part, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiskError {
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Uniformly sampled series on `[start, start + (n−1)·step]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct TimeSeries<T> {
    pub start: T,
    pub step: T,
    values: Vec<T>,
}

impl<T: Real> TimeSeries<T> {
    pub fn new(start: T, step: T, values: Vec<T>) -> Result<Self, RiskError> {
        if !(step > T::zero()) || !step.is_finite() || !start.is_finite() {
            return Err(RiskError::Argument(format!("invalid time axis (start {start}, step {step})")));
        }
        if values.len() < 2 {
            return Err(RiskError::Argument(format!("time series needs at least 2 values, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RiskError::Argument("time series contains non-finite values".into()));
        }
        Ok(Self { start, step, values })
    }

    /// Constant series `c` over `[start, start + duration]` with two samples.
    pub fn constant(start: T, duration: T, c: T) -> Result<Self, RiskError> {
        Self::new(start, duration, vec![c, c])
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn duration(&self) -> T {
        self.step * T::from_usize_lossy(self.values.len() - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.values.len()).map(move |i| self.start + self.step * T::from_usize_lossy(i))
    }

    /// Normalized trapezoid weights; they sum to one.
    pub fn trapezoid_weights(&self) -> Vec<T> {
        let n = self.values.len();
        let inner = T::one() / T::from_usize_lossy(n - 1);
        let half = inner / T::lit(2.0);
        (0..n).map(|i| if i == 0 || i == n - 1 { half } else { inner }).collect()
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Self {
        Self {
            start: self.start,
            step: self.step,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Trapezoidal time average `(1/T)∫ X dt` over the series window.
pub fn time_average<T: Real>(series: &TimeSeries<T>) -> T {
    let v = series.values();
    let n = v.len();
    let interior: T = v[1..n - 1].iter().copied().sum();
    (interior + (v[0] + v[n - 1]) / T::lit(2.0)) / T::from_usize_lossy(n - 1)
}

/// Time average of the hinge `(X(t) − s)₊`.
pub fn cvar_tail_series<T: Real>(series: &TimeSeries<T>, s: T) -> T {
    time_average(&series.map(|x| positive_part(x - s)))
}

fn check_nonempty<T: Real>(values: &[T]) -> Result<(), RiskError> {
    if values.is_empty() {
        return Err(RiskError::Argument("empty sample set".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(RiskError::Argument("non-finite sample value".into()));
    }
    Ok(())
}

pub fn ensemble_mean<T: Real>(values: &[T]) -> Result<T, RiskError> {
    check_nonempty(values)?;
    Ok(values.iter().copied().sum::<T>() / T::from_usize_lossy(values.len()))
}

/// Unbiased sample variance (divisor `N − 1`).
pub fn variance<T: Real>(values: &[T]) -> Result<T, RiskError> {
    check_nonempty(values)?;
    if values.len() < 2 {
        return Err(RiskError::Argument("variance needs at least 2 samples".into()));
    }
    let m = ensemble_mean(values)?;
    let ss: T = values.iter().map(|&x| (x - m) * (x - m)).sum();
    Ok(ss / T::from_usize_lossy(values.len() - 1))
}

pub fn std_dev<T: Real>(values: &[T]) -> Result<T, RiskError> {
    variance(values).map(|v| v.sqrt())
}

/// Squared standard error `Var/N` of the ensemble mean.
pub fn estimator_variance<T: Real>(values: &[T]) -> Result<T, RiskError> {
    Ok(variance(values)? / T::from_usize_lossy(values.len()))
}

/// Ensemble mean of time averages, the standard estimator of `E[X]`.
pub fn mean_of_time_averages<T: Real>(series: &[TimeSeries<T>]) -> Result<T, RiskError> {
    let avgs: Vec<T> = series.iter().map(time_average).collect();
    ensemble_mean(&avgs)
}

fn check_level<T: Real>(beta: T) -> Result<(), RiskError> {
    if beta > T::zero() && beta < T::one() {
        Ok(())
    } else {
        Err(RiskError::Argument(format!("risk level {beta} must lie in (0, 1)")))
    }
}

fn sorted<T: Real>(values: &[T]) -> Vec<T> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    v
}

/// One-based rank `⌈βN⌉`, with `βN` snapped to the nearest integer when within
/// `1e-9·N` of it so that decimal levels like 0.9 behave exactly.
fn quantile_rank<T: Real>(beta: T, n: usize) -> usize {
    let bn = beta.as_f64() * n as f64;
    let nearest = bn.round();
    let r = if (bn - nearest).abs() <= 1e-9 * n as f64 { nearest } else { bn.ceil() };
    (r as usize).clamp(1, n)
}

/// Empirical `β`-quantile `inf{s : F̂(s) ≥ β}`, the `⌈βN⌉`-th order statistic.
pub fn value_at_risk<T: Real>(values: &[T], beta: T) -> Result<T, RiskError> {
    check_level(beta)?;
    check_nonempty(values)?;
    let v = sorted(values);
    Ok(v[quantile_rank(beta, v.len()) - 1])
}

/// Rockafellar–Uryasev objective `s + (1/(1−β))·mean((x − s)₊)`.
pub fn ru_objective<T: Real>(values: &[T], beta: T, s: T) -> T {
    let tail: T = values.iter().map(|&x| positive_part(x - s)).sum::<T>() / T::from_usize_lossy(values.len());
    s + tail / (T::one() - beta)
}

/// CVaR value together with the minimizing threshold `s★`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvarEstimate<T> {
    pub value: T,
    pub s_star: T,
}

/// Exact minimum of the Rockafellar–Uryasev objective; `s★ = VaR_β` is a minimizer.
pub fn cvar<T: Real>(values: &[T], beta: T) -> Result<CvarEstimate<T>, RiskError> {
    let s = value_at_risk(values, beta)?;
    Ok(CvarEstimate {
        value: ru_objective(values, beta, s),
        s_star: s,
    })
}

fn check_weights<T: Real>(values: &[T], weights: &[T]) -> Result<(), RiskError> {
    check_nonempty(values)?;
    if values.len() != weights.len() {
        return Err(RiskError::Argument("values and weights differ in length".into()));
    }
    if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
        return Err(RiskError::Argument("weights must be finite and non-negative".into()));
    }
    let total: T = weights.iter().copied().sum();
    if (total - T::one()).abs() > T::lit(1e-9) {
        return Err(RiskError::Argument(format!("weights sum to {total}, expected 1")));
    }
    Ok(())
}

/// Quantile of a discrete law with atoms `values` and probabilities `weights`.
pub fn weighted_value_at_risk<T: Real>(values: &[T], weights: &[T], beta: T) -> Result<T, RiskError> {
    check_level(beta)?;
    check_weights(values, weights)?;
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let tol = T::lit(1e-12);
    let mut cum = T::zero();
    for &i in &idx {
        cum = cum + weights[i];
        if cum >= beta - tol {
            return Ok(values[i]);
        }
    }
    Ok(values[*idx.last().expect("nonempty")])
}

/// CVaR of a discrete law; used for pooled time-series samples.
pub fn weighted_cvar<T: Real>(values: &[T], weights: &[T], beta: T) -> Result<CvarEstimate<T>, RiskError> {
    let s = weighted_value_at_risk(values, weights, beta)?;
    let tail: T = values.iter().zip(weights).map(|(&x, &w)| w * positive_part(x - s)).sum();
    Ok(CvarEstimate {
        value: s + tail / (T::one() - beta),
        s_star: s,
    })
}
