use super::config::RunConfig;
use super::{WorkflowError, ROOF_SCALE};
use crate::optimizer::{OptimizeError, SampledProblem};
use crate::risk::{time_average, TimeSeries};
use crate::seeding::child_rng;
use crate::surrogate::{base_moment_series, BuildingGeometry, Design, LoadConfig, MeanProfileInflow, ScenarioInflow};
use crate::turbulence::{calibrate_energy, MannGenerator, TurbulenceBox};
use crate::wind::{mean_wind_speed, MeanProfileConfig, ScenarioDistribution, WindScenario, NOMINAL_ROUGHNESS};

/// Maps optimizer coordinates to a design: twist in radians, and optionally
/// the roof diameter in units of [`ROOF_SCALE`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignMap {
    pub optimize_roof: bool,
    pub fixed_roof: f64,
}

impl DesignMap {
    pub fn dimension(&self) -> usize {
        if self.optimize_roof {
            2
        } else {
            1
        }
    }

    pub fn to_design(&self, z: &[f64]) -> Design<f64> {
        let a = if self.optimize_roof { z[1] * ROOF_SCALE } else { self.fixed_roof };
        Design::new(z[0], a)
    }

    pub fn to_coordinates(&self, d: &Design<f64>) -> Vec<f64> {
        let mut z = vec![d.twist];
        if self.optimize_roof {
            z.push(d.roof_minor / ROOF_SCALE);
        }
        z
    }

    /// Reported values: twist in degrees, roof diameter in m.
    pub fn report(&self, z: &[f64]) -> Vec<f64> {
        let d = self.to_design(z);
        let mut out = vec![d.twist.to_degrees()];
        if self.optimize_roof {
            out.push(d.roof_minor);
        }
        out
    }

    pub fn names(&self) -> &'static [&'static str] {
        if self.optimize_roof {
            &["psi", "a"]
        } else {
            &["psi"]
        }
    }
}

/// One scenario together with its turbulence box.
#[derive(Debug, Clone)]
pub struct ScenarioSample {
    pub scenario: WindScenario<f64>,
    pub turbulence: Option<TurbulenceBox>,
}

/// Base-moment objective of the surrogate under random wind.
///
/// Loads are divided by `scale` so that objective values are of order one.
#[derive(Debug, Clone)]
pub struct WindLoadProblem {
    pub geometry: BuildingGeometry<f64>,
    pub load: LoadConfig<f64>,
    pub profile: MeanProfileConfig<f64>,
    pub distribution: Option<ScenarioDistribution>,
    pub pwd: Option<WindScenario<f64>>,
    pub generator: Option<MannGenerator>,
    pub wrap: bool,
    pub map: DesignMap,
    pub master_seed: u64,
    pub stream: u64,
    /// Draw the predominant-wind scenario for every index.
    pub pinned: bool,
    pub scale: f64,
}

/// `σ_u/u★` of the reference intensity `1/ln(z_ref/z0)` at the nominal roughness.
pub fn unit_sigma_target(profile: &MeanProfileConfig<f64>, u_star: f64) -> Result<f64, WorkflowError> {
    let z_ref = profile.reference_height;
    let u = mean_wind_speed(z_ref, u_star, NOMINAL_ROUGHNESS, profile)?;
    Ok(u / (u_star * (z_ref / NOMINAL_ROUGHNESS).ln()))
}

impl WindLoadProblem {
    /// Builds the problem for `cfg`. `distribution` is required for sampled
    /// objectives; the predominant-wind scenario comes from the config
    /// override or from the distribution.
    pub fn new(cfg: &RunConfig, distribution: Option<ScenarioDistribution>, stream: u64, pinned: bool) -> Result<Self, WorkflowError> {
        let b = &cfg.building;
        let d = &cfg.design;
        let map = DesignMap {
            optimize_roof: d.optimize_roof,
            fixed_roof: d.roof_diameters[0],
        };
        let mut geometry = BuildingGeometry::new(
            b.height,
            b.base_diameters,
            d.roof_area(),
            b.strips,
            Design::new(d.twist_deg.to_radians(), d.roof_diameters[0]),
        )?;
        geometry.orientation = b.orientation_deg.to_radians();
        let profile = cfg.wind.profile();
        let pwd = match (&cfg.wind.pwd, &distribution) {
            (Some(p), _) => Some(WindScenario::new(
                p.friction_velocity,
                p.direction_deg.to_radians(),
                p.roughness_length,
                p.seed,
            )?),
            (None, Some(dist)) => Some(dist.pwd_scenario()?),
            (None, None) => None,
        };
        if pinned && pwd.is_none() {
            return Err(WorkflowError::Config(
                "predominant-wind scenario needs a calibrated model or a [wind.pwd] section".into(),
            ));
        }
        if !pinned && distribution.is_none() {
            return Err(WorkflowError::Config("sampled objectives need a calibrated model".into()));
        }
        let generator = if cfg.turbulence.enabled {
            let grid = cfg.turbulence.grid()?;
            let shape = cfg.turbulence.shape()?;
            let params = match cfg.turbulence.energy_coefficient {
                Some(_) => shape,
                None => {
                    let u_ref = match &distribution {
                        Some(dist) => dist.expected_friction_velocity()?,
                        None => pwd.map(|s| s.friction_velocity).unwrap_or(1.0),
                    };
                    calibrate_energy(unit_sigma_target(&profile, u_ref)?, &shape, &grid)?
                }
            };
            Some(MannGenerator::new(params, grid)?)
        } else {
            None
        };
        let mut problem = Self {
            geometry,
            load: cfg.load.config(),
            profile,
            distribution,
            pwd,
            generator,
            wrap: cfg.turbulence.wrap,
            map,
            master_seed: cfg.master_seed,
            stream,
            pinned,
            scale: 1.0,
        };
        problem.scale = problem.reference_scale()?;
        Ok(problem)
    }

    /// Time-averaged moment of the initial design in the predominant-wind mean
    /// flow, or 1 when no such scenario is known.
    fn reference_scale(&self) -> Result<f64, WorkflowError> {
        let Some(pwd) = self.pwd else { return Ok(1.0) };
        let inflow = MeanProfileInflow {
            scenario: pwd,
            profile: self.profile,
        };
        let m = time_average(&base_moment_series(&self.geometry, &inflow, &self.load)?.norm);
        Ok(if m > 0.0 { m } else { 1.0 })
    }

    pub fn initial_coordinates(&self) -> Vec<f64> {
        self.map.to_coordinates(&self.geometry.design)
    }

    /// Bounds in optimizer coordinates.
    pub fn bounds(&self, cfg: &RunConfig) -> (Vec<f64>, Vec<f64>) {
        let d = &cfg.design;
        let mut lo = vec![d.twist_bounds_deg[0].to_radians()];
        let mut hi = vec![d.twist_bounds_deg[1].to_radians()];
        if self.map.optimize_roof {
            lo.push(d.roof_bounds[0] / ROOF_SCALE);
            hi.push(d.roof_bounds[1] / ROOF_SCALE);
        }
        (lo, hi)
    }

    pub fn scenario(&self, index: u64) -> Result<WindScenario<f64>, WorkflowError> {
        if self.pinned {
            return self
                .pwd
                .ok_or_else(|| WorkflowError::Config("no predominant-wind scenario".into()));
        }
        let dist = self
            .distribution
            .as_ref()
            .ok_or_else(|| WorkflowError::Config("no calibrated model".into()))?;
        let mut rng = child_rng(self.master_seed, self.stream, index);
        Ok(dist.sample_scenario(&mut rng)?)
    }

    pub fn sample(&self, index: u64) -> Result<ScenarioSample, WorkflowError> {
        let scenario = self.scenario(index)?;
        let turbulence = match &self.generator {
            Some(g) => Some(g.generate(scenario.generator_seed())?),
            None => None,
        };
        Ok(ScenarioSample { scenario, turbulence })
    }

    /// Base-moment norm in N·m for a design given in optimizer coordinates.
    pub fn moment_series(&self, z: &[f64], sample: &ScenarioSample) -> Result<TimeSeries<f64>, WorkflowError> {
        if z.len() != self.map.dimension() {
            return Err(WorkflowError::Config("design dimension mismatch".into()));
        }
        let geom = self.geometry.with_design(self.map.to_design(z))?;
        let series = match &sample.turbulence {
            Some(b) => {
                let inflow = ScenarioInflow::new(sample.scenario, self.profile, b, self.wrap)?;
                base_moment_series(&geom, &inflow, &self.load)?
            }
            None => {
                let inflow = MeanProfileInflow {
                    scenario: sample.scenario,
                    profile: self.profile,
                };
                base_moment_series(&geom, &inflow, &self.load)?
            }
        };
        Ok(series.norm)
    }
}

impl SampledProblem for WindLoadProblem {
    type Sample = ScenarioSample;

    fn dimension(&self) -> usize {
        self.map.dimension()
    }

    fn draw(&self, index: u64) -> Result<ScenarioSample, OptimizeError> {
        self.sample(index).map_err(|e| OptimizeError::Evaluation(e.to_string()))
    }

    fn evaluate(&self, design: &[f64], sample: &ScenarioSample) -> Result<TimeSeries<f64>, OptimizeError> {
        let s = self.scale;
        self.moment_series(design, sample)
            .map(|m| m.map(|x| x / s))
            .map_err(|e| OptimizeError::Evaluation(e.to_string()))
    }
}
