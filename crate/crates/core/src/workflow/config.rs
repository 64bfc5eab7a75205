use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::WorkflowError;
use crate::copula::{CalibrationOptions, Orientation};
use crate::optimizer::{BatchPolicy, ObjectiveKind, OptimizerConfig};
use crate::surrogate::{DragModel, LoadConfig, SheddingModel};
use crate::turbulence::{GridSpec, SpectralParams};
use crate::wind::{MeanProfileConfig, PwdRoughness};

pub const SCHEMA_VERSION: u32 = 1;

/// Complete run description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub master_seed: u64,
    /// Worker threads for per-sample evaluation; 0 uses all cores.
    pub workers: usize,
    pub paths: PathsConfig,
    pub problem: ProblemConfig,
    pub building: BuildingConfig,
    pub design: DesignConfig,
    pub wind: WindConfig,
    pub turbulence: TurbulenceConfig,
    pub load: LoadSection,
    pub optimizer: OptimizerSection,
    pub calibration: CalibrationSection,
    pub evaluate: EvaluateSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            master_seed: 1,
            workers: 1,
            paths: PathsConfig::default(),
            problem: ProblemConfig::default(),
            building: BuildingConfig::default(),
            design: DesignConfig::default(),
            wind: WindConfig::default(),
            turbulence: TurbulenceConfig::default(),
            load: LoadSection::default(),
            optimizer: OptimizerSection::default(),
            calibration: CalibrationSection::default(),
            evaluate: EvaluateSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Historical records, `timestamp,speed_mps,direction_deg`.
    pub wind_data: Option<PathBuf>,
    /// Calibrated joint model (JSON).
    pub model: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            wind_data: None,
            model: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    /// Expected base moment.
    Prob1,
    /// CVaR of the base moment.
    Prob2,
    /// Base moment under the predominant-wind scenario.
    Prob3,
}

impl Problem {
    pub fn kind(self) -> ObjectiveKind {
        match self {
            Problem::Prob1 => ObjectiveKind::Mean,
            Problem::Prob2 => ObjectiveKind::Cvar,
            Problem::Prob3 => ObjectiveKind::Pwd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: Problem,
    pub beta: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            kind: Problem::Prob1,
            beta: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildingConfig {
    pub height: f64,
    pub base_diameters: [f64; 2],
    /// Rotation of the base section, degrees.
    pub orientation_deg: f64,
    pub strips: usize,
}

impl Default for BuildingConfig {
    fn default() -> Self {
        Self {
            height: 180.0,
            base_diameters: [30.0, 30.0],
            orientation_deg: 0.0,
            strips: 32,
        }
    }
}

/// Initial design and the design box. The roof area is fixed by the initial
/// roof diameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConfig {
    pub twist_deg: f64,
    pub roof_diameters: [f64; 2],
    /// Optimize the roof diameter `a` as well as the twist.
    pub optimize_roof: bool,
    pub twist_bounds_deg: [f64; 2],
    pub roof_bounds: [f64; 2],
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            twist_deg: 295.0,
            roof_diameters: [30.0, 30.0],
            optimize_roof: true,
            twist_bounds_deg: [0.0, 360.0],
            roof_bounds: [15.0, 60.0],
        }
    }
}

impl DesignConfig {
    pub fn roof_area(&self) -> f64 {
        std::f64::consts::PI * self.roof_diameters[0] * self.roof_diameters[1] / 4.0
    }
}

/// Predominant-wind scenario given directly instead of from a calibrated model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PwdOverride {
    pub friction_velocity: f64,
    pub direction_deg: f64,
    pub roughness_length: f64,
    pub seed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindConfig {
    pub kappa: f64,
    pub coriolis: f64,
    pub z_min: f64,
    pub reference_height: f64,
    pub roughness_bounds: [f64; 2],
    pub pwd_roughness: PwdRoughness,
    pub pwd: Option<PwdOverride>,
}

impl Default for WindConfig {
    fn default() -> Self {
        let p = MeanProfileConfig::<f64>::default();
        Self {
            kappa: p.kappa,
            coriolis: p.coriolis,
            z_min: p.z_min,
            reference_height: p.reference_height,
            roughness_bounds: [0.01, 0.1],
            pwd_roughness: PwdRoughness::Nominal,
            pwd: None,
        }
    }
}

impl WindConfig {
    pub fn profile(&self) -> MeanProfileConfig<f64> {
        MeanProfileConfig {
            kappa: self.kappa,
            coriolis: self.coriolis,
            z_min: self.z_min,
            reference_height: self.reference_height,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TurbulenceConfig {
    /// Without turbulence the inflow is the mean profile alone.
    pub enabled: bool,
    pub counts: [usize; 3],
    /// Box extents in m; the first axis is swept by frozen advection.
    pub extents: [f64; 3],
    pub length_scale: f64,
    pub anisotropy: f64,
    /// `αε^{2/3}` for a unit friction velocity; calibrated to the reference
    /// intensity `1/ln(z_ref/z0)` at `z0 = 0.05` when absent.
    pub energy_coefficient: Option<f64>,
    /// Wrap the advected coordinate periodically.
    pub wrap: bool,
}

impl Default for TurbulenceConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            counts: [256, 16, 32],
            extents: [4096.0, 128.0, 256.0],
            length_scale: 33.6,
            anisotropy: 3.9,
            energy_coefficient: None,
            wrap: true,
        }
    }
}

impl TurbulenceConfig {
    pub fn grid(&self) -> Result<GridSpec, WorkflowError> {
        Ok(GridSpec::new(self.counts, self.extents)?)
    }

    pub fn shape(&self) -> Result<SpectralParams, WorkflowError> {
        Ok(SpectralParams::new(self.energy_coefficient.unwrap_or(1.0), self.length_scale, self.anisotropy)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadSection {
    pub air_density: f64,
    pub window: [f64; 2],
    pub dt: f64,
    pub drag: DragModel<f64>,
    pub shedding: Option<SheddingModel<f64>>,
}

impl Default for LoadSection {
    fn default() -> Self {
        let c = LoadConfig::<f64>::default();
        Self {
            air_density: c.air_density,
            window: [c.window.0, c.window.1],
            dt: c.dt,
            drag: c.drag,
            shedding: c.shedding,
        }
    }
}

impl LoadSection {
    pub fn config(&self) -> LoadConfig<f64> {
        LoadConfig {
            air_density: self.air_density,
            drag: self.drag,
            shedding: self.shedding,
            window: (self.window[0], self.window[1]),
            dt: self.dt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchMode {
    Adaptive,
    Fixed,
}

/// Optimizer settings in design units: twist in degrees, roof diameter in m.
/// Internally the twist is in radians and the roof diameter in tens of metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub step_size: f64,
    pub theta: f64,
    pub batch: BatchMode,
    pub initial_batch: usize,
    pub max_batch: usize,
    pub fd_twist_deg: f64,
    pub fd_roof: f64,
    pub tolerance: f64,
    pub stall_window: usize,
    pub max_iterations: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            step_size: 0.5,
            theta: 0.5,
            batch: BatchMode::Adaptive,
            initial_batch: 4,
            max_batch: 64,
            fd_twist_deg: 1.0,
            fd_roof: 0.1,
            tolerance: 0.01,
            stall_window: 3,
            max_iterations: 40,
        }
    }
}

impl OptimizerSection {
    pub fn config(&self, optimize_roof: bool) -> OptimizerConfig {
        let mut fd_steps = vec![self.fd_twist_deg.to_radians()];
        if optimize_roof {
            fd_steps.push(self.fd_roof / super::ROOF_SCALE);
        }
        OptimizerConfig {
            step_size: self.step_size,
            theta: self.theta,
            batch: match self.batch {
                BatchMode::Adaptive => BatchPolicy::Adaptive {
                    initial: self.initial_batch,
                    max: self.max_batch,
                },
                BatchMode::Fixed => BatchPolicy::Fixed { size: self.max_batch },
            },
            fd_steps,
            tolerance: self.tolerance,
            stall_window: self.stall_window,
            max_iterations: self.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    pub components: usize,
    /// Fixed component locations in degrees; free fit when empty.
    pub orientation_deg: Vec<f64>,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            components: 4,
            orientation_deg: Vec::new(),
        }
    }
}

impl CalibrationSection {
    pub fn options(&self) -> CalibrationOptions {
        CalibrationOptions {
            components: self.components,
            orientation: if self.orientation_deg.is_empty() {
                Orientation::Free
            } else {
                Orientation::Prescribed(self.orientation_deg.iter().map(|d| d.to_radians()).collect())
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub samples: usize,
    pub histogram_bins: usize,
    pub windrose_samples: usize,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self {
            samples: 30,
            histogram_bins: 20,
            windrose_samples: 2500,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, WorkflowError> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| WorkflowError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self, WorkflowError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| WorkflowError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(dir) = path.parent() {
            cfg.paths.resolve_relative(dir);
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String, WorkflowError> {
        toml::to_string_pretty(self).map_err(|e| WorkflowError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), WorkflowError> {
        let bad = |m: String| Err(WorkflowError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if !(self.problem.beta > 0.0 && self.problem.beta < 1.0) {
            return bad(format!("beta = {} must lie in (0, 1)", self.problem.beta));
        }
        let d = &self.design;
        if d.roof_diameters.iter().any(|x| !(*x > 0.0)) {
            return bad("roof diameters must be positive".into());
        }
        if !(d.twist_bounds_deg[0] <= d.twist_deg && d.twist_deg <= d.twist_bounds_deg[1]) {
            return bad("initial twist outside its bounds".into());
        }
        if d.optimize_roof && !(d.roof_bounds[0] > 0.0 && d.roof_bounds[0] <= d.roof_diameters[0] && d.roof_diameters[0] <= d.roof_bounds[1]) {
            return bad("initial roof diameter outside its bounds".into());
        }
        if self.building.strips < 2 {
            return bad("at least 2 strips required".into());
        }
        if self.evaluate.histogram_bins == 0 {
            return bad("histogram_bins must be positive".into());
        }
        self.load.config().validate()?;
        self.wind.profile().validate()?;
        self.optimizer
            .config(d.optimize_roof)
            .validate(if d.optimize_roof { 2 } else { 1 })?;
        if self.turbulence.enabled {
            self.turbulence.grid()?;
            self.turbulence.shape()?;
        }
        Ok(())
    }
}

impl PathsConfig {
    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.wind_data.as_mut() {
            fix(p);
        }
        if let Some(p) = self.model.as_mut() {
            fix(p);
        }
        fix(&mut self.output_dir);
    }
}
