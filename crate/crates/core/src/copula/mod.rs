//! Joint speed/direction model: fitted marginals joined by an empirical copula.

mod empirical;
mod von_mises;
mod weibull;

use std::io::Read;
use std::path::Path;

use chrono::NaiveDateTime;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use empirical::EmpiricalCopula;
pub use von_mises::{fit_von_mises_mixture, Orientation, VonMisesComponent, VonMisesFit, VonMisesMixture, KAPPA_MAX};
pub use weibull::{fit_weibull, WeibullFit, WeibullMarginal};

use crate::scalar::wrap_angle;
use crate::stats::ks_statistic;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CopulaError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

/// One historical observation at the reference height.
#[derive(Debug, Clone, PartialEq)]
pub struct WindRecord {
    pub timestamp: NaiveDateTime,
    /// m/s, non-negative.
    pub speed: f64,
    /// Degrees in `[0, 360)`.
    pub direction_deg: f64,
}

impl WindRecord {
    pub fn new(timestamp: NaiveDateTime, speed: f64, direction_deg: f64) -> Result<Self, CopulaError> {
        if !(speed.is_finite() && speed >= 0.0) {
            return Err(CopulaError::Argument(format!("speed {speed} must be finite and non-negative")));
        }
        if !(0.0..=360.0).contains(&direction_deg) {
            return Err(CopulaError::Argument(format!("direction {direction_deg} outside [0, 360)")));
        }
        let direction_deg = if direction_deg == 360.0 { 0.0 } else { direction_deg };
        Ok(Self { timestamp, speed, direction_deg })
    }

    pub fn direction_rad(&self) -> f64 {
        wrap_angle(self.direction_deg.to_radians())
    }
}

const TIMESTAMP_FORMATS: [&str; 5] = [
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
    "%Y%m%dT%H%M",
];

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .or_else(|| {
            chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
        })
}

#[derive(Deserialize)]
struct RawRecord {
    timestamp: String,
    speed_mps: String,
    direction_deg: String,
}

/// Parses records from CSV with header `timestamp,speed_mps,direction_deg`.
pub fn read_records<R: Read>(reader: R) -> Result<Vec<WindRecord>, CopulaError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CopulaError::Parse { line: 1, message: e.to_string() })?
        .clone();
    let expected = ["timestamp", "speed_mps", "direction_deg"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(CopulaError::Parse {
            line: 1,
            message: format!("expected header `{}`, found `{}`", expected.join(","), headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<RawRecord>() {
        let row = row.map_err(|e| CopulaError::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = out.len() as u64 + 2;
        let bad = |message: String| CopulaError::Parse { line, message };
        let timestamp = parse_timestamp(&row.timestamp).ok_or_else(|| bad(format!("unparseable timestamp `{}`", row.timestamp)))?;
        let speed: f64 = row.speed_mps.parse().map_err(|_| bad(format!("unparseable speed `{}`", row.speed_mps)))?;
        let dir: f64 = row
            .direction_deg
            .parse()
            .map_err(|_| bad(format!("unparseable direction `{}`", row.direction_deg)))?;
        out.push(WindRecord::new(timestamp, speed, dir).map_err(|e| bad(e.to_string()))?);
    }
    Ok(out)
}

pub fn read_records_file(path: &Path) -> Result<Vec<WindRecord>, CopulaError> {
    let f = std::fs::File::open(path).map_err(|e| CopulaError::Io(format!("{}: {e}", path.display())))?;
    read_records(std::io::BufReader::new(f))
}

/// Writes records in the ingestion format.
pub fn write_records<W: std::io::Write>(writer: W, records: &[WindRecord]) -> Result<(), CopulaError> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| CopulaError::Io(e.to_string());
    w.write_record(["timestamp", "speed_mps", "direction_deg"]).map_err(io)?;
    for r in records {
        w.write_record([
            r.timestamp.format("%Y-%m-%dT%H:%M:%S").to_string(),
            format!("{:.4}", r.speed),
            format!("{:.3}", r.direction_deg),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| CopulaError::Io(e.to_string()))
}

/// Transformed samples `(F̂θ(θ_i), F̂ū(ū_i))`.
pub fn pseudo_observations(
    records: &[WindRecord],
    direction: &VonMisesMixture,
    speed: &WeibullMarginal,
) -> Result<EmpiricalCopula, CopulaError> {
    let pairs = records
        .iter()
        .map(|r| [direction.cdf(r.direction_rad()), speed.cdf(r.speed)])
        .collect();
    EmpiricalCopula::new(pairs)
}

/// Calibrated joint law of direction (radians) and reference-height mean speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointWindModel {
    pub direction: VonMisesMixture,
    pub speed: WeibullMarginal,
    pub copula: EmpiricalCopula,
}

impl JointWindModel {
    /// Draws `(θ, ū)` through the smoothed empirical copula and the inverse marginals.
    pub fn sample_joint<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, f64), CopulaError> {
        let [u, v] = self.copula.sample(rng)?;
        let theta = wrap_angle(self.direction.quantile(u));
        let speed = self.speed.quantile(v.min(1.0 - 1e-15));
        Ok((theta, speed))
    }

    /// Same marginals with the dependence removed.
    pub fn with_independence<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        Self {
            copula: self.copula.with_independence(rng),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub components: usize,
    pub orientation: Orientation,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            components: 4,
            orientation: Orientation::Free,
        }
    }
}

/// Fit diagnostics reported alongside a calibrated model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDiagnostics {
    pub records: usize,
    pub dropped_zero_speeds: usize,
    pub speed_log_likelihood: f64,
    pub direction_log_likelihood: f64,
    pub direction_em_iterations: usize,
    pub speed_ks: f64,
    pub direction_ks: f64,
}

/// Fits both marginals and builds the empirical copula from the records.
pub fn calibrate(
    records: &[WindRecord],
    options: &CalibrationOptions,
) -> Result<(JointWindModel, CalibrationDiagnostics), CopulaError> {
    if records.is_empty() {
        return Err(CopulaError::Argument("no wind records".into()));
    }
    let speeds: Vec<f64> = records.iter().map(|r| r.speed).collect();
    let angles: Vec<f64> = records.iter().map(|r| r.direction_rad()).collect();
    let wfit = fit_weibull(&speeds)?;
    let vfit = fit_von_mises_mixture(&angles, options.components, &options.orientation)?;
    let copula = pseudo_observations(records, &vfit.mixture, &wfit.marginal)?;
    let positive: Vec<f64> = speeds.iter().copied().filter(|&s| s > 0.0).collect();
    let diagnostics = CalibrationDiagnostics {
        records: records.len(),
        dropped_zero_speeds: wfit.dropped_zeros,
        speed_log_likelihood: wfit.log_likelihood,
        direction_log_likelihood: vfit.mixture.log_likelihood(&angles),
        direction_em_iterations: vfit.iterations,
        speed_ks: ks_statistic(&positive, |x| wfit.marginal.cdf(x)),
        direction_ks: ks_statistic(&angles, |x| vfit.mixture.cdf(x)),
    };
    Ok((
        JointWindModel {
            direction: vfit.mixture,
            speed: wfit.marginal,
            copula,
        },
        diagnostics,
    ))
}
