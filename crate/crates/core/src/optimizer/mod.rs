//! Stochastic gradient descent with adaptive sampling for the mean, CVaR and
//! single-scenario objectives.

mod benchmark;
mod primitives;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use benchmark::NoisyQuadratic;
pub use primitives::{
    fd_gradient, gradient_statistics, next_batch_size, norm_test, ru_series_objective, sgd_step, solve_s_star,
};

use crate::risk::{time_average, cvar_tail_series, RiskError, TimeSeries};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// Expected time-averaged load.
    Mean,
    /// CVaR of the load at level `β`.
    Cvar,
    /// Load under the single predominant-wind scenario.
    Pwd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub beta: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self {
            kind,
            beta: 0.9,
            lower,
            upper,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), OptimizeError> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(OptimizeError::Argument(format!("β = {} must lie in (0, 1)", self.beta)));
        }
        if self.lower.len() != dim || self.upper.len() != dim {
            return Err(OptimizeError::Argument(format!("bounds must have dimension {dim}")));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l <= u)) {
            return Err(OptimizeError::Argument("empty design box".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum BatchPolicy {
    /// Start at `initial` and grow by the norm test up to `max`.
    Adaptive { initial: usize, max: usize },
    /// Constant batch size.
    Fixed { size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// SGD step `α`.
    pub step_size: f64,
    /// Norm-test constant `ϑ`.
    pub theta: f64,
    pub batch: BatchPolicy,
    /// Finite-difference increment per design coordinate.
    pub fd_steps: Vec<f64>,
    /// Relative change of the objective estimate that counts as stalled.
    pub tolerance: f64,
    /// Consecutive stalled iterations required to stop.
    pub stall_window: usize,
    pub max_iterations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step_size: 0.5,
            theta: 0.5,
            batch: BatchPolicy::Adaptive { initial: 4, max: 64 },
            fd_steps: vec![1e-3],
            tolerance: 0.01,
            stall_window: 3,
            max_iterations: 100,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self, dim: usize) -> Result<(), OptimizeError> {
        if !(self.step_size > 0.0) {
            return Err(OptimizeError::Argument("step size must be positive".into()));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(OptimizeError::Argument("ϑ must lie in (0, 1)".into()));
        }
        if self.fd_steps.len() != dim || self.fd_steps.iter().any(|h| !(*h > 0.0)) {
            return Err(OptimizeError::Argument(format!("need {dim} positive finite-difference steps")));
        }
        if !(self.tolerance > 0.0) || self.stall_window == 0 || self.max_iterations == 0 {
            return Err(OptimizeError::Argument("tolerance, window and iteration cap must be positive".into()));
        }
        match self.batch {
            BatchPolicy::Adaptive { initial, max } if initial == 0 || max < initial => {
                Err(OptimizeError::Argument(format!("invalid adaptive batch range [{initial}, {max}]")))
            }
            BatchPolicy::Fixed { size: 0 } => Err(OptimizeError::Argument("batch size must be positive".into())),
            _ => Ok(()),
        }
    }
}

/// A random objective `J(Z, ξ)` given through its load history.
///
/// Samples are addressed by index so that a run is reproducible and the same
/// draw is reused across all finite-difference stencil points.
pub trait SampledProblem: Sync {
    type Sample: Send + Sync;

    fn dimension(&self) -> usize;

    /// The `index`-th independent scenario.
    fn draw(&self, index: u64) -> Result<Self::Sample, OptimizeError>;

    /// Load history of `design` under `sample`.
    fn evaluate(&self, design: &[f64], sample: &Self::Sample) -> Result<TimeSeries<f64>, OptimizeError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub design: Vec<f64>,
    /// Batch estimate `J_S(Z_k)`.
    pub objective: f64,
    pub gradient: Vec<f64>,
    /// Summed per-coordinate sample variance of the per-sample gradients.
    pub gradient_variance: Option<f64>,
    pub batch_size: usize,
    /// Index of the first scenario of the batch.
    pub first_sample: u64,
    pub s_star: Option<f64>,
}

impl IterationRecord {
    pub fn gradient_norm(&self) -> f64 {
        self.gradient.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRecord {
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    /// Scenarios drawn over the run.
    pub total_samples: u64,
}

impl OptimizationRecord {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.iterations.last()
    }

    pub fn final_design(&self) -> Option<&[f64]> {
        self.last().map(|r| r.design.as_slice())
    }

    /// Writes `iter,<coordinate names>,J,gradnorm,batch,sstar`; `transform`
    /// maps internal design coordinates to reported values.
    pub fn write_csv<W: Write, F: Fn(&[f64]) -> Vec<f64>>(
        &self,
        writer: W,
        coordinate_names: &[&str],
        transform: F,
    ) -> Result<(), OptimizeError> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| OptimizeError::Io(e.to_string());
        let mut header = vec!["iter"];
        header.extend_from_slice(coordinate_names);
        header.extend_from_slice(&["J", "gradnorm", "batch", "sstar"]);
        w.write_record(&header).map_err(io)?;
        for r in &self.iterations {
            let mut row = vec![r.iteration.to_string()];
            row.extend(transform(&r.design).iter().map(|x| format!("{x:.12e}")));
            row.push(format!("{:.12e}", r.objective));
            row.push(format!("{:.12e}", r.gradient_norm()));
            row.push(r.batch_size.to_string());
            row.push(r.s_star.map(|s| format!("{s:.12e}")).unwrap_or_default());
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| OptimizeError::Io(e.to_string()))
    }
}

/// Error with the iterations completed before it.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{error} (after {} iterations)", partial.iterations.len())]
pub struct OptimizationFailure {
    pub error: OptimizeError,
    pub partial: OptimizationRecord,
}

/// Batch objective, per-sample objective values and per-sample gradients at `design`.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchEvaluation {
    pub objective: f64,
    pub values: Vec<f64>,
    pub gradients: Vec<Vec<f64>>,
    pub s_star: Option<f64>,
}

/// Evaluates the batch objective and its per-sample gradients.
///
/// Per-sample work runs on the rayon pool; results are collected in sample
/// order so reductions are deterministic. For CVaR, `s★` is solved from the
/// loads at `design` and then held fixed for the gradients, and per-sample
/// quantities carry the `1/(1−β)` factor so that their mean is the batch
/// estimate `s★ + (1/(1−β))·mean J_i(Z, s★)` and its gradient.
pub fn batch_gradient<P: SampledProblem>(
    problem: &P,
    design: &[f64],
    samples: &[P::Sample],
    spec: &ObjectiveSpec,
    fd_steps: &[f64],
) -> Result<BatchEvaluation, OptimizeError> {
    if samples.is_empty() {
        return Err(OptimizeError::Argument("empty sample set".into()));
    }
    let loads: Vec<TimeSeries<f64>> = samples
        .par_iter()
        .map(|s| problem.evaluate(design, s))
        .collect::<Result<_, _>>()?;
    let s_star = match spec.kind {
        ObjectiveKind::Cvar => Some(solve_s_star(&loads, spec.beta)?.s_star),
        _ => None,
    };
    let scalar = |series: &TimeSeries<f64>| match s_star {
        Some(s) => cvar_tail_series(series, s),
        None => time_average(series),
    };
    let per_sample: Vec<(f64, Vec<f64>)> = samples
        .par_iter()
        .zip(loads.par_iter())
        .map(|(sample, load)| {
            let value = scalar(load);
            let grad = fd_gradient(
                |z| problem.evaluate(z, sample).map(|l| scalar(&l)),
                design,
                fd_steps,
                &spec.lower,
                &spec.upper,
            )?;
            Ok((value, grad))
        })
        .collect::<Result<_, OptimizeError>>()?;
    let n = samples.len() as f64;
    let (values, gradients): (Vec<f64>, Vec<Vec<f64>>) = match s_star {
        Some(s) => {
            let k = 1.0 / (1.0 - spec.beta);
            per_sample
                .into_iter()
                .map(|(v, g)| (s + k * v, g.into_iter().map(|x| k * x).collect()))
                .unzip()
        }
        None => per_sample.into_iter().unzip(),
    };
    let objective = values.iter().sum::<f64>() / n;
    Ok(BatchEvaluation {
        objective,
        values,
        gradients,
        s_star,
    })
}

/// Adaptive-sampling SGD.
///
/// Each iteration draws a fresh batch (scenario indices continue from the
/// previous batch; the `pwd` kind always uses scenario 0 with batch size 1),
/// evaluates the batch objective and gradient, and stops once the relative
/// change of the objective estimate stays below the tolerance for
/// `stall_window` consecutive iterations. Otherwise it takes a projected SGD
/// step and, under the adaptive policy, grows the batch when the norm test
/// fails.
pub fn optimize<P: SampledProblem>(
    problem: &P,
    initial: &[f64],
    spec: &ObjectiveSpec,
    config: &OptimizerConfig,
) -> Result<OptimizationRecord, OptimizationFailure> {
    let mut record = OptimizationRecord {
        iterations: Vec::new(),
        converged: false,
        total_samples: 0,
    };
    let fail = |error: OptimizeError, partial: &OptimizationRecord| OptimizationFailure {
        error,
        partial: partial.clone(),
    };
    let dim = problem.dimension();
    if let Err(e) = spec.validate(dim).and_then(|_| config.validate(dim)) {
        return Err(fail(e, &record));
    }
    if initial.len() != dim {
        return Err(fail(OptimizeError::Argument(format!("initial design must have dimension {dim}")), &record));
    }
    let pinned = spec.kind == ObjectiveKind::Pwd;
    let mut batch = match (pinned, config.batch) {
        (true, _) => 1,
        (false, BatchPolicy::Adaptive { initial, .. }) => initial,
        (false, BatchPolicy::Fixed { size }) => size,
    };
    let mut design: Vec<f64> = initial
        .iter()
        .zip(spec.lower.iter().zip(&spec.upper))
        .map(|(z, (lo, hi))| z.max(*lo).min(*hi))
        .collect();
    let mut next_index: u64 = 0;
    let mut stalled = 0;
    let mut previous: Option<f64> = None;

    for iteration in 0..config.max_iterations {
        let first = if pinned { 0 } else { next_index };
        let samples: Vec<P::Sample> = match (first..first + batch as u64)
            .into_par_iter()
            .map(|i| problem.draw(i))
            .collect::<Result<_, _>>()
        {
            Ok(s) => s,
            Err(e) => return Err(fail(e, &record)),
        };
        if !pinned {
            next_index += batch as u64;
            record.total_samples += batch as u64;
        } else if iteration == 0 {
            record.total_samples = 1;
        }
        let eval = match batch_gradient(problem, &design, &samples, spec, &config.fd_steps) {
            Ok(e) => e,
            Err(e) => return Err(fail(e, &record)),
        };
        let (mean_grad, variance) = match gradient_statistics(&eval.gradients) {
            Ok(s) => s,
            Err(e) => return Err(fail(e, &record)),
        };
        record.iterations.push(IterationRecord {
            iteration,
            design: design.clone(),
            objective: eval.objective,
            gradient: mean_grad.clone(),
            gradient_variance: variance,
            batch_size: batch,
            first_sample: first,
            s_star: eval.s_star,
        });

        if let Some(prev) = previous {
            let rel = (eval.objective - prev).abs() / prev.abs().max(f64::MIN_POSITIVE);
            stalled = if rel < config.tolerance { stalled + 1 } else { 0 };
        }
        previous = Some(eval.objective);
        if stalled >= config.stall_window {
            record.converged = true;
            break;
        }
        if iteration + 1 == config.max_iterations {
            break;
        }

        design = sgd_step(&design, &mean_grad, config.step_size, &spec.lower, &spec.upper);
        if let (false, BatchPolicy::Adaptive { max, .. }) = (pinned, config.batch) {
            if batch >= 2 {
                let pass = norm_test(&eval.gradients, &mean_grad, config.theta).map_err(|e| fail(e, &record))?;
                if !pass {
                    batch = next_batch_size(&eval.gradients, &mean_grad, config.theta, max)
                        .map_err(|e| fail(e, &record))?;
                }
            } else if batch < max {
                // a single sample carries no variance estimate; grow to enable the test
                batch = 2;
            }
        }
    }
    Ok(record)
}
