//! End-to-end commands: calibrate, optimize, evaluate and wind-rose tables.

mod config;
mod problem;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    BatchMode, BuildingConfig, CalibrationSection, DesignConfig, EvaluateSection, LoadSection, OptimizerSection,
    PathsConfig, Problem, ProblemConfig, PwdOverride, RunConfig, TurbulenceConfig, WindConfig, SCHEMA_VERSION,
};
pub use problem::{unit_sigma_target, DesignMap, ScenarioSample, WindLoadProblem};

use crate::copula::{calibrate, read_records_file, CalibrationDiagnostics, CopulaError, JointWindModel};
use crate::optimizer::{optimize, ObjectiveSpec, OptimizationFailure, OptimizationRecord, OptimizeError};
use crate::risk::{cvar, ensemble_mean, std_dev, time_average, value_at_risk, RiskError};
use crate::seeding::{child_rng, stream};
use crate::surrogate::LoadError;
use crate::turbulence::TurbulenceError;
use crate::wind::{ScenarioDistribution, WindError};

/// Roof diameters are optimized in units of 10 m so both coordinates are of order one.
pub const ROOF_SCALE: f64 = 10.0;

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Copula(#[from] CopulaError),
    #[error(transparent)]
    Wind(#[from] WindError),
    #[error(transparent)]
    Turbulence(#[from] TurbulenceError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error("optimization aborted: {0}")]
    Aborted(Box<OptimizationFailure>),
}

impl WorkflowError {
    /// Errors caused by the invocation (bad config, bad input data) rather than
    /// by a failure during computation.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            WorkflowError::Config(_)
                | WorkflowError::Copula(CopulaError::Parse { .. } | CopulaError::Argument(_) | CopulaError::Io(_))
        )
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> WorkflowError {
    WorkflowError::Io(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, WorkflowError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| io_err(path, e))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), WorkflowError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Runs `f` on a rayon pool with `workers` threads (0: rayon default).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R, WorkflowError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| WorkflowError::Config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn load_model(path: &Path) -> Result<JointWindModel, WorkflowError> {
    let text = fs::read_to_string(path).map_err(|e| WorkflowError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| WorkflowError::Config(format!("{}: {e}", path.display())))
}

pub fn save_model(path: &Path, model: &JointWindModel) -> Result<(), WorkflowError> {
    write_json(path, model)
}

fn model_path(cfg: &RunConfig) -> PathBuf {
    cfg.paths
        .model
        .clone()
        .unwrap_or_else(|| cfg.paths.output_dir.join("model.json"))
}

/// Scenario law of the run, if a calibrated model file exists.
pub fn scenario_distribution(cfg: &RunConfig) -> Result<Option<ScenarioDistribution>, WorkflowError> {
    let path = model_path(cfg);
    if !path.exists() {
        return Ok(None);
    }
    let model = load_model(&path)?;
    let mut dist = ScenarioDistribution::new(model, cfg.wind.profile())
        .with_roughness_bounds(cfg.wind.roughness_bounds[0], cfg.wind.roughness_bounds[1])?;
    dist.pwd_roughness = cfg.wind.pwd_roughness;
    Ok(Some(dist))
}

fn require_distribution(cfg: &RunConfig) -> Result<ScenarioDistribution, WorkflowError> {
    scenario_distribution(cfg)?.ok_or_else(|| {
        WorkflowError::Config(format!(
            "calibrated model {} not found; run `calibrate` first",
            model_path(cfg).display()
        ))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub model_path: PathBuf,
    pub diagnostics: CalibrationDiagnostics,
}

/// Fits the joint wind model to the configured data and writes it with its diagnostics.
pub fn cmd_calibrate(cfg: &RunConfig) -> Result<CalibrationReport, WorkflowError> {
    let data = cfg
        .paths
        .wind_data
        .as_ref()
        .ok_or_else(|| WorkflowError::Config("paths.wind_data is not set".into()))?;
    if !data.exists() {
        return Err(WorkflowError::Config(format!("wind data {} not found", data.display())));
    }
    let records = read_records_file(data)?;
    let (model, diagnostics) = calibrate(&records, &cfg.calibration.options())?;
    let path = model_path(cfg);
    save_model(&path, &model)?;
    write_json(&cfg.paths.output_dir.join("calibration.json"), &diagnostics)?;
    Ok(CalibrationReport {
        model_path: path,
        diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub twist_deg: f64,
    pub roof_diameters: [f64; 2],
}

impl DesignReport {
    fn from_coordinates(problem: &WindLoadProblem, z: &[f64]) -> Result<Self, WorkflowError> {
        let geom = problem.geometry.with_design(problem.map.to_design(z))?;
        Ok(Self {
            twist_deg: geom.design.twist.to_degrees(),
            roof_diameters: geom.roof_diameters()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationSummary {
    pub problem: Problem,
    pub master_seed: u64,
    pub iterations: usize,
    pub converged: bool,
    pub total_samples: u64,
    /// Moment scale dividing the internal objective (N·m).
    pub objective_scale: f64,
    pub initial_design: DesignReport,
    pub final_design: DesignReport,
    /// Batch objective estimates in N·m.
    pub j_initial: f64,
    pub j_final: f64,
    /// `1 − J_final/J_initial`.
    pub improvement: f64,
}

/// Result of [`cmd_optimize`]; objectives in the record are in N·m.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationOutcome {
    pub record: OptimizationRecord,
    pub summary: OptimizationSummary,
    pub record_path: PathBuf,
    pub summary_path: PathBuf,
}

fn physical_record(record: &OptimizationRecord, scale: f64) -> OptimizationRecord {
    let mut out = record.clone();
    for it in &mut out.iterations {
        it.objective *= scale;
        it.gradient.iter_mut().for_each(|g| *g *= scale);
        it.gradient_variance = it.gradient_variance.map(|v| v * scale * scale);
        it.s_star = it.s_star.map(|s| s * scale);
    }
    out
}

/// Builds the optimization problem of `cfg` without running it.
pub fn build_problem(cfg: &RunConfig) -> Result<(WindLoadProblem, ObjectiveSpec), WorkflowError> {
    let kind = cfg.problem.kind;
    let dist = match kind {
        Problem::Prob3 if cfg.wind.pwd.is_some() => scenario_distribution(cfg)?,
        Problem::Prob3 => Some(require_distribution(cfg)?),
        _ => Some(require_distribution(cfg)?),
    };
    let problem = WindLoadProblem::new(cfg, dist, stream::SCENARIO, kind == Problem::Prob3)?;
    let (lower, upper) = problem.bounds(cfg);
    let mut spec = ObjectiveSpec::new(kind.kind(), lower, upper);
    spec.beta = cfg.problem.beta;
    Ok((problem, spec))
}

/// Runs the optimizer and writes `record.csv` and `summary.json` to the output
/// directory. On failure the partial record is still written.
pub fn cmd_optimize(cfg: &RunConfig) -> Result<OptimizationOutcome, WorkflowError> {
    let (problem, spec) = build_problem(cfg)?;
    let opt = cfg.optimizer.config(cfg.design.optimize_roof);
    let initial = problem.initial_coordinates();
    let out = &cfg.paths.output_dir;
    let record_path = out.join("record.csv");
    let summary_path = out.join("summary.json");
    let write_record = |rec: &OptimizationRecord| -> Result<(), WorkflowError> {
        let phys = physical_record(rec, problem.scale);
        phys.write_csv(create(&record_path)?, problem.map.names(), |z| problem.map.report(z))?;
        Ok(())
    };
    let record = match with_workers(cfg.workers, || optimize(&problem, &initial, &spec, &opt))? {
        Ok(r) => r,
        Err(failure) => {
            write_record(&failure.partial)?;
            return Err(WorkflowError::Aborted(Box::new(failure)));
        }
    };
    write_record(&record)?;
    let record = physical_record(&record, problem.scale);
    let first = record
        .iterations
        .first()
        .ok_or_else(|| WorkflowError::Config("optimizer returned no iterations".into()))?;
    let last = record.iterations.last().unwrap_or(first);
    let summary = OptimizationSummary {
        problem: cfg.problem.kind,
        master_seed: cfg.master_seed,
        iterations: record.iterations.len(),
        converged: record.converged,
        total_samples: record.total_samples,
        objective_scale: problem.scale,
        initial_design: DesignReport::from_coordinates(&problem, &first.design)?,
        final_design: DesignReport::from_coordinates(&problem, &last.design)?,
        j_initial: first.objective,
        j_final: last.objective,
        improvement: 1.0 - last.objective / first.objective,
    };
    write_json(&summary_path, &summary)?;
    Ok(OptimizationOutcome {
        record,
        summary,
        record_path,
        summary_path,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub design: DesignReport,
    pub samples: usize,
    pub beta: f64,
    /// Statistics of the time-averaged base moment, N·m.
    pub mean: f64,
    pub std: Option<f64>,
    pub value_at_risk: f64,
    pub cvar: f64,
    pub values: Vec<f64>,
}

/// Time-averaged moments (N·m) of a design on evaluation scenarios `0..n`.
pub fn evaluate_design(problem: &WindLoadProblem, twist_deg: f64, roof: Option<f64>, n: usize) -> Result<Vec<f64>, WorkflowError> {
    if n == 0 {
        return Err(WorkflowError::Config("at least one evaluation sample required".into()));
    }
    let mut z = vec![twist_deg.to_radians()];
    if problem.map.optimize_roof {
        z.push(roof.unwrap_or(problem.map.fixed_roof) / ROOF_SCALE);
    }
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let sample = problem.sample(i)?;
            Ok(time_average(&problem.moment_series(&z, &sample)?))
        })
        .collect()
}

/// Monte Carlo statistics of a fixed design plus `histogram.csv` and `cdf.csv`.
///
/// Uses the evaluation stream, independent of the optimization scenarios.
pub fn cmd_evaluate(cfg: &RunConfig, twist_deg: f64, roof: Option<f64>, n: usize) -> Result<EvaluationReport, WorkflowError> {
    let dist = require_distribution(cfg)?;
    let mut eval_cfg = cfg.clone();
    eval_cfg.design.optimize_roof = true;
    eval_cfg.design.roof_bounds = [f64::MIN_POSITIVE, f64::MAX];
    let problem = WindLoadProblem::new(&eval_cfg, Some(dist), stream::EVALUATION, false)?;
    let a = roof.unwrap_or(cfg.design.roof_diameters[0]);
    let values = with_workers(cfg.workers, || evaluate_design(&problem, twist_deg, Some(a), n))??;
    let beta = cfg.problem.beta;
    let report = EvaluationReport {
        design: DesignReport::from_coordinates(&problem, &[twist_deg.to_radians(), a / ROOF_SCALE])?,
        samples: n,
        beta,
        mean: ensemble_mean(&values)?,
        std: if n >= 2 { Some(std_dev(&values)?) } else { None },
        value_at_risk: value_at_risk(&values, beta)?,
        cvar: cvar(&values, beta)?.value,
        values: values.clone(),
    };
    let out = &cfg.paths.output_dir;
    write_histogram(&out.join("histogram.csv"), &values, cfg.evaluate.histogram_bins)?;
    write_cdf(&out.join("cdf.csv"), &values)?;
    write_json(&out.join("evaluation.json"), &report)?;
    Ok(report)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> WorkflowError + '_ {
    move |e| io_err(path, e)
}

/// `bin_lower,bin_upper,count,density` over equal-width bins.
pub fn write_histogram(path: &Path, values: &[f64], bins: usize) -> Result<(), WorkflowError> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    let e = csv_err(path);
    w.write_record(["bin_lower", "bin_upper", "count", "density"]).map_err(&e)?;
    let n = values.len() as f64;
    for (i, c) in counts.iter().enumerate() {
        let a = lo + width * i as f64;
        w.write_record([
            format!("{a:.9e}"),
            format!("{:.9e}", a + width),
            c.to_string(),
            format!("{:.9e}", *c as f64 / (n * width)),
        ])
        .map_err(&e)?;
    }
    w.flush().map_err(|x| io_err(path, x))
}

/// Empirical CDF `value,probability` at the sorted sample values.
pub fn write_cdf(path: &Path, values: &[f64]) -> Result<(), WorkflowError> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut w = csv::Writer::from_writer(create(path)?);
    let e = csv_err(path);
    w.write_record(["value", "probability"]).map_err(&e)?;
    let n = sorted.len() as f64;
    for (i, v) in sorted.iter().enumerate() {
        w.write_record([format!("{v:.9e}"), format!("{:.9e}", (i + 1) as f64 / n)]).map_err(&e)?;
    }
    w.flush().map_err(|x| io_err(path, x))
}

/// Upper edges of the wind-rose speed bins (m/s); the last bin is open.
pub const ROSE_SPEED_EDGES: [f64; 6] = [3.0, 6.0, 9.0, 12.0, 15.0, 20.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindRose {
    /// `frequencies[sector][speed_bin]`, sectors of 30° starting at 0°.
    pub frequencies: Vec<Vec<f64>>,
    pub samples: usize,
}

impl WindRose {
    pub fn sector_totals(&self) -> Vec<f64> {
        self.frequencies.iter().map(|row| row.iter().sum()).collect()
    }
}

fn speed_bin(speed: f64) -> usize {
    ROSE_SPEED_EDGES.iter().position(|e| speed < *e).unwrap_or(ROSE_SPEED_EDGES.len())
}

/// Sector frequencies of `(θ, ū)` pairs, θ in radians.
pub fn wind_rose_from_pairs(pairs: &[(f64, f64)]) -> WindRose {
    let mut freq = vec![vec![0.0; ROSE_SPEED_EDGES.len() + 1]; 12];
    let w = 1.0 / pairs.len().max(1) as f64;
    for &(theta, speed) in pairs {
        let sector = ((theta.to_degrees().rem_euclid(360.0) / 30.0) as usize).min(11);
        freq[sector][speed_bin(speed)] += w;
    }
    WindRose {
        frequencies: freq,
        samples: pairs.len(),
    }
}

/// Joint samples from the calibrated model binned into 30° sectors × speed
/// bins, written to `windrose.csv`.
pub fn cmd_windrose(cfg: &RunConfig, n: usize) -> Result<WindRose, WorkflowError> {
    if n == 0 {
        return Err(WorkflowError::Config("at least one sample required".into()));
    }
    let model = load_model(&model_path(cfg))?;
    let pairs = (0..n as u64)
        .map(|i| model.sample_joint(&mut child_rng(cfg.master_seed, stream::WINDROSE, i)))
        .collect::<Result<Vec<_>, _>>()?;
    let rose = wind_rose_from_pairs(&pairs);
    let path = cfg.paths.output_dir.join("windrose.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let e = csv_err(&path);
    w.write_record(["sector_lower_deg", "sector_upper_deg", "speed_lower", "speed_upper", "frequency"])
        .map_err(&e)?;
    for (s, row) in rose.frequencies.iter().enumerate() {
        for (b, f) in row.iter().enumerate() {
            let lower = if b == 0 { 0.0 } else { ROSE_SPEED_EDGES[b - 1] };
            let upper = ROSE_SPEED_EDGES.get(b).map(|x| x.to_string()).unwrap_or_else(|| "inf".into());
            w.write_record([
                (30 * s).to_string(),
                (30 * (s + 1)).to_string(),
                lower.to_string(),
                upper,
                format!("{f:.12e}"),
            ])
            .map_err(&e)?;
        }
    }
    w.flush().map_err(|x| io_err(&path, x))?;
    Ok(rose)
}
