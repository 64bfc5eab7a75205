use super::OptimizeError;
use crate::risk::{cvar_tail_series, CvarEstimate, TimeSeries};
use crate::scalar::Real;

/// Finite-difference gradient of `f` at `design`.
///
/// Central differences where `design ± h` stays inside `[lower, upper]`,
/// one-sided otherwise. The closure is expected to reuse the same random
/// scenario at every stencil point.
pub fn fd_gradient<T: Real, F>(mut f: F, design: &[T], h: &[T], lower: &[T], upper: &[T]) -> Result<Vec<T>, OptimizeError>
where
    F: FnMut(&[T]) -> Result<T, OptimizeError>,
{
    let d = design.len();
    if h.len() != d || lower.len() != d || upper.len() != d {
        return Err(OptimizeError::Argument("dimension mismatch in finite-difference inputs".into()));
    }
    if let Some(bad) = h.iter().find(|x| !(**x > T::zero())) {
        return Err(OptimizeError::Argument(format!("finite-difference step {bad} must be positive")));
    }
    let mut centre: Option<T> = None;
    let mut grad = Vec::with_capacity(d);
    let mut z = design.to_vec();
    for i in 0..d {
        let (x, hi) = (design[i], h[i]);
        let fits_up = x + hi <= upper[i];
        let fits_down = x - hi >= lower[i];
        let g = if fits_up && fits_down {
            z[i] = x + hi;
            let fp = f(&z)?;
            z[i] = x - hi;
            let fm = f(&z)?;
            (fp - fm) / (T::lit(2.0) * hi)
        } else {
            let f0 = match centre {
                Some(v) => v,
                None => {
                    let v = f(design)?;
                    centre = Some(v);
                    v
                }
            };
            if fits_up {
                z[i] = x + hi;
                (f(&z)? - f0) / hi
            } else if fits_down {
                z[i] = x - hi;
                (f0 - f(&z)?) / hi
            } else {
                return Err(OptimizeError::Argument(format!(
                    "step {hi} does not fit inside the bounds of coordinate {i}"
                )));
            }
        };
        z[i] = x;
        grad.push(g);
    }
    Ok(grad)
}

/// Mean of per-sample gradients and the summed per-coordinate sample variance
/// `(1/(N−1)) Σ‖∇J_i − ∇J_S‖²` (`None` for a single sample).
pub fn gradient_statistics<T: Real>(per_sample: &[Vec<T>]) -> Result<(Vec<T>, Option<T>), OptimizeError> {
    let first = per_sample
        .first()
        .ok_or_else(|| OptimizeError::Argument("empty sample set".into()))?;
    let d = first.len();
    if per_sample.iter().any(|g| g.len() != d) {
        return Err(OptimizeError::Argument("gradients differ in dimension".into()));
    }
    let n = T::from_usize_lossy(per_sample.len());
    let mean: Vec<T> = (0..d)
        .map(|j| per_sample.iter().map(|g| g[j]).sum::<T>() / n)
        .collect();
    if per_sample.len() < 2 {
        return Ok((mean, None));
    }
    let ss: T = per_sample
        .iter()
        .map(|g| g.iter().zip(&mean).map(|(a, m)| (*a - *m) * (*a - *m)).sum::<T>())
        .sum();
    Ok((mean, Some(ss / (n - T::one()))))
}

fn norm_sq<T: Real>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum()
}

fn check_theta<T: Real>(theta: T) -> Result<(), OptimizeError> {
    if theta > T::zero() && theta < T::one() {
        Ok(())
    } else {
        Err(OptimizeError::Argument(format!("norm-test constant {theta} must lie in (0, 1)")))
    }
}

/// Norm test `Var_S(∇J_i)/N ≤ ϑ²‖∇J_S‖²`.
pub fn norm_test<T: Real>(per_sample: &[Vec<T>], mean: &[T], theta: T) -> Result<bool, OptimizeError> {
    check_theta(theta)?;
    if per_sample.len() < 2 {
        return Err(OptimizeError::Argument("norm test needs at least 2 samples".into()));
    }
    let (_, var) = gradient_statistics(per_sample)?;
    let var = var.expect("two or more samples");
    let n = T::from_usize_lossy(per_sample.len());
    Ok(var / n <= theta * theta * norm_sq(mean))
}

/// `⌈Var_S(∇J_i)/(ϑ²‖∇J_S‖²)⌉` clamped to `[N + 1, max_batch]`; a zero mean
/// gradient gives `max_batch`.
pub fn next_batch_size<T: Real>(
    per_sample: &[Vec<T>],
    mean: &[T],
    theta: T,
    max_batch: usize,
) -> Result<usize, OptimizeError> {
    check_theta(theta)?;
    let n = per_sample.len();
    let (_, var) = gradient_statistics(per_sample)?;
    let var = var.ok_or_else(|| OptimizeError::Argument("batch growth needs at least 2 samples".into()))?;
    let lo = (n + 1).min(max_batch.max(n));
    let g2 = norm_sq(mean);
    if g2 == T::zero() {
        return Ok(max_batch.max(n));
    }
    let want = (var / (theta * theta * g2)).ceil();
    let want = want.to_f64().unwrap_or(f64::INFINITY);
    let want = if want >= max_batch as f64 { max_batch } else { want as usize };
    Ok(want.clamp(lo, max_batch.max(n)))
}

/// `Z − α∇J` projected onto the box.
pub fn sgd_step<T: Real>(design: &[T], gradient: &[T], step: T, lower: &[T], upper: &[T]) -> Vec<T> {
    design
        .iter()
        .zip(gradient)
        .zip(lower.iter().zip(upper))
        .map(|((z, g), (lo, hi))| (*z - step * *g).max(*lo).min(*hi))
        .collect()
}

/// Sample-average Rockafellar–Uryasev objective of a set of load histories.
pub fn ru_series_objective<T: Real>(series: &[TimeSeries<T>], beta: T, s: T) -> T {
    let n = T::from_usize_lossy(series.len());
    let tail: T = series.iter().map(|x| cvar_tail_series(x, s)).sum::<T>() / n;
    s + tail / (T::one() - beta)
}

/// Minimizes `s + (1/(1−β))·(1/N)Σ_i ⟨(M_i − s)₊⟩` over `s`.
///
/// Golden-section search on `[min, max]` of the observed values to a tolerance
/// of `1e-6·(max − min)`, followed by a comparison against the nearest
/// breakpoints; the objective is piecewise linear with breakpoints at the
/// observed values, so the minimum sits on one of them.
pub fn solve_s_star<T: Real>(series: &[TimeSeries<T>], beta: T) -> Result<CvarEstimate<T>, OptimizeError> {
    if series.is_empty() {
        return Err(OptimizeError::Argument("empty sample set".into()));
    }
    if !(beta > T::zero() && beta < T::one()) {
        return Err(OptimizeError::Argument(format!("risk level {beta} must lie in (0, 1)")));
    }
    let mut kinks: Vec<T> = series.iter().flat_map(|s| s.values().iter().copied()).collect();
    kinks.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    kinks.dedup();
    let (lo, hi) = (kinks[0], kinks[kinks.len() - 1]);
    let f = |s: T| ru_series_objective(series, beta, s);
    if hi <= lo {
        return Ok(CvarEstimate { value: f(lo), s_star: lo });
    }
    let inv_phi = T::lit((5.0_f64.sqrt() - 1.0) / 2.0);
    let tol = T::lit(1e-6) * (hi - lo);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = (a + b) / T::lit(2.0);
    let pos = kinks.partition_point(|k| *k < mid);
    let mut best = CvarEstimate { value: f(mid), s_star: mid };
    for k in &kinks[pos.saturating_sub(3)..(pos + 3).min(kinks.len())] {
        let v = f(*k);
        if v <= best.value {
            best = CvarEstimate { value: v, s_star: *k };
        }
    }
    Ok(best)
}
