//! Quasi-steady strip model for the base moment of a tapered, twisted tower.

mod geometry;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use geometry::{enforce_area_constraint, BuildingGeometry, CrossSection, Design};

use crate::risk::{RiskError, TimeSeries};
use crate::scalar::Real;
use crate::turbulence::TurbulenceBox;
use crate::wind::{mean_wind_speed, mean_wind_vector, MeanProfileConfig, WindError, WindScenario};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoadError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error(transparent)]
    Wind(#[from] WindError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Drag of an elliptic section as a function of the along-wind to cross-wind
/// extent ratio `r`: `Cd(r) = c_min + c_span/(1 + sharpness·r^exponent)`.
///
/// The defaults give about 2.0 for a flat plate broadside on, 0.7 for a circle
/// and 0.2 in the streamlined limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct DragModel<T> {
    pub c_min: T,
    pub c_span: T,
    pub sharpness: T,
    pub exponent: T,
}

impl<T: Real> Default for DragModel<T> {
    fn default() -> Self {
        Self {
            c_min: T::lit(0.2),
            c_span: T::lit(1.8),
            sharpness: T::lit(2.6),
            exponent: T::lit(1.5),
        }
    }
}

impl<T: Real> DragModel<T> {
    pub fn coefficient(&self, ratio: T) -> T {
        self.c_min + self.c_span / (T::one() + self.sharpness * ratio.powf(self.exponent))
    }
}

/// Optional cross-wind forcing `½ρ C_L W Δz |U|² sin(2π St |U| t / W)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct SheddingModel<T> {
    pub lift_coefficient: T,
    pub strouhal: T,
}

impl<T: Real> Default for SheddingModel<T> {
    fn default() -> Self {
        Self {
            lift_coefficient: T::lit(0.3),
            strouhal: T::lit(0.2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct LoadConfig<T> {
    /// kg/m³.
    pub air_density: T,
    pub drag: DragModel<T>,
    pub shedding: Option<SheddingModel<T>>,
    /// Analysis window `[start, end]` in s.
    pub window: (T, T),
    pub dt: T,
}

impl<T: Real> Default for LoadConfig<T> {
    fn default() -> Self {
        Self {
            air_density: T::lit(1.225),
            drag: DragModel::default(),
            shedding: None,
            window: (T::lit(50.0), T::lit(200.0)),
            dt: T::lit(0.5),
        }
    }
}

impl<T: Real> LoadConfig<T> {
    pub fn validate(&self) -> Result<(), LoadError> {
        let (a, b) = self.window;
        if !(a >= T::zero() && b > a && self.dt > T::zero()) {
            return Err(LoadError::Argument(format!("invalid window [{a}, {b}] with step {}", self.dt)));
        }
        if !(self.air_density > T::zero()) {
            return Err(LoadError::Argument("air density must be positive".into()));
        }
        Ok(())
    }

    /// Number of sample instants in the window.
    pub fn n_times(&self) -> usize {
        let (a, b) = self.window;
        ((b - a) / self.dt).round().to_usize().unwrap_or(0) + 1
    }
}

/// Velocity field seen by the building.
pub trait Inflow<T> {
    fn velocity(&self, t: T, z: T) -> Result<[T; 3], LoadError>;
}

/// Still air.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroInflow;

impl<T: Real> Inflow<T> for ZeroInflow {
    fn velocity(&self, _t: T, _z: T) -> Result<[T; 3], LoadError> {
        Ok([T::zero(); 3])
    }
}

/// Height- and time-independent wind.
#[derive(Debug, Clone, Copy)]
pub struct UniformInflow<T> {
    pub velocity: [T; 3],
}

impl<T: Real> Inflow<T> for UniformInflow<T> {
    fn velocity(&self, _t: T, _z: T) -> Result<[T; 3], LoadError> {
        Ok(self.velocity)
    }
}

/// Mean profile of a scenario without fluctuations.
#[derive(Debug, Clone, Copy)]
pub struct MeanProfileInflow<T> {
    pub scenario: WindScenario<T>,
    pub profile: MeanProfileConfig<T>,
}

impl<T: Real> Inflow<T> for MeanProfileInflow<T> {
    fn velocity(&self, _t: T, z: T) -> Result<[T; 3], LoadError> {
        Ok(mean_wind_vector(z, &self.scenario, &self.profile)?)
    }
}

/// Mean profile plus `u★`-scaled fluctuations read from a unit turbulence box
/// at the building centreline `y = 0`.
///
/// Box components are (along-wind, lateral, vertical) and are rotated into
/// the global frame by the scenario direction.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioInflow<'a> {
    pub scenario: WindScenario<f64>,
    pub profile: MeanProfileConfig<f64>,
    pub turbulence: &'a TurbulenceBox,
    pub advection_speed: f64,
    pub wrap: bool,
}

impl<'a> ScenarioInflow<'a> {
    /// Advection at the mean speed at the reference height.
    pub fn new(
        scenario: WindScenario<f64>,
        profile: MeanProfileConfig<f64>,
        turbulence: &'a TurbulenceBox,
        wrap: bool,
    ) -> Result<Self, LoadError> {
        let advection_speed = mean_wind_speed(
            profile.reference_height,
            scenario.friction_velocity,
            scenario.roughness_length,
            &profile,
        )?;
        Ok(Self {
            scenario,
            profile,
            turbulence,
            advection_speed,
            wrap,
        })
    }
}

impl Inflow<f64> for ScenarioInflow<'_> {
    fn velocity(&self, t: f64, z: f64) -> Result<[f64; 3], LoadError> {
        let mean = mean_wind_vector(z, &self.scenario, &self.profile)?;
        let x = t * self.advection_speed;
        let grid = &self.turbulence.grid;
        if !self.wrap {
            let last = grid.spacing(0) * (grid.counts[0] - 1) as f64;
            if !(0.0..=last).contains(&x) {
                return Err(LoadError::Range(format!("t = {t} outside the turbulence box time extent")));
            }
        }
        let u = self.turbulence.probe(x, 0.0, z);
        let s = self.scenario.friction_velocity;
        let [ex, ey, _] = self.scenario.direction_vector();
        Ok([
            mean[0] + s * (u[0] * ex - u[1] * ey),
            mean[1] + s * (u[0] * ey + u[1] * ex),
            s * u[2],
        ])
    }
}

/// Base-moment history: vector moments and their norms.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSeries<T: Real> {
    pub moments: Vec<[T; 3]>,
    pub norm: TimeSeries<T>,
}

impl<T: Real> LoadSeries<T> {
    /// Writes `t,Mx,My,Mz,Mnorm` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), LoadError> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| LoadError::Io(e.to_string());
        w.write_record(["t", "Mx", "My", "Mz", "Mnorm"]).map_err(io)?;
        for ((t, m), n) in self.norm.times().zip(&self.moments).zip(self.norm.values()) {
            w.write_record([t, m[0], m[1], m[2], *n].map(|x| format!("{:e}", x.as_f64()))).map_err(io)?;
        }
        w.flush().map_err(|e| LoadError::Io(e.to_string()))
    }
}

struct Strip<T> {
    z: T,
    section: CrossSection<T>,
}

/// Horizontal strip force for horizontal velocity `(ux, uy)`.
fn strip_force<T: Real>(strip: &Strip<T>, dz: T, ux: T, uy: T, t: T, cfg: &LoadConfig<T>) -> [T; 2] {
    let speed = (ux * ux + uy * uy).sqrt();
    if speed == T::zero() {
        return [T::zero(); 2];
    }
    let phi = uy.atan2(ux);
    let width = strip.section.projected_width(phi);
    let ratio = T::lit(2.0) * strip.section.along_half_extent(phi) / width;
    let cd = cfg.drag.coefficient(ratio);
    let q = T::lit(0.5) * cfg.air_density * width * dz;
    let drag = q * cd * speed;
    let mut f = [drag * ux, drag * uy];
    if let Some(sh) = cfg.shedding {
        let phase = T::TAU() * sh.strouhal * speed * t / width;
        let lift = q * sh.lift_coefficient * speed * phase.sin();
        f[0] = f[0] - lift * uy;
        f[1] = f[1] + lift * ux;
    }
    f
}

/// Base-moment series `M(t) = Σ_j (0, 0, z_j) × F_j(t)` over the analysis window.
pub fn base_moment_series<T: Real, I: Inflow<T> + ?Sized>(
    geom: &BuildingGeometry<T>,
    inflow: &I,
    cfg: &LoadConfig<T>,
) -> Result<LoadSeries<T>, LoadError> {
    cfg.validate()?;
    geom.validate()?;
    let (mids, dz) = geom.strips();
    let strips = mids
        .into_iter()
        .map(|z| Ok(Strip { z, section: geom.cross_section(z)? }))
        .collect::<Result<Vec<_>, LoadError>>()?;
    let n = cfg.n_times();
    let mut moments = Vec::with_capacity(n);
    let mut norms = Vec::with_capacity(n);
    for i in 0..n {
        let t = cfg.window.0 + cfg.dt * T::from_usize_lossy(i);
        let mut m = [T::zero(); 3];
        for s in &strips {
            let u = inflow.velocity(t, s.z)?;
            let f = strip_force(s, dz, u[0], u[1], t, cfg);
            m[0] = m[0] - s.z * f[1];
            m[1] = m[1] + s.z * f[0];
        }
        norms.push((m[0] * m[0] + m[1] * m[1]).sqrt());
        moments.push(m);
    }
    let norm = TimeSeries::new(cfg.window.0, cfg.dt, norms)?;
    Ok(LoadSeries { moments, norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle() -> BuildingGeometry<f64> {
        BuildingGeometry::reference(Design::new(0.0, 30.0)).unwrap()
    }

    #[test]
    fn area_constraint_examples() {
        let area = 225.0 * PI;
        assert!((enforce_area_constraint(30.0, area).unwrap() - 30.0).abs() < 1e-12);
        assert!((enforce_area_constraint(24.383, area).unwrap() - 900.0 / 24.383).abs() < 1e-12);
        let b = enforce_area_constraint(24.383, area).unwrap();
        assert!((PI * 24.383 * b / 4.0 - area).abs() < 1e-9);
        assert!((enforce_area_constraint(40.0, area).unwrap() * 2.0 - enforce_area_constraint(20.0, area).unwrap()).abs() < 1e-12);
        assert!(matches!(enforce_area_constraint(0.0, area), Err(LoadError::Domain(_))));
    }

    #[test]
    fn cross_section_interpolates() {
        let g = BuildingGeometry::<f64>::reference(Design::new(0.8, 20.0)).unwrap();
        let base = g.cross_section(0.0).unwrap();
        assert_eq!((base.semi_a, base.semi_b, base.twist), (15.0, 15.0, 0.0));
        let roof = g.cross_section(180.0).unwrap();
        assert!((roof.semi_a - 10.0).abs() < 1e-12 && (roof.semi_b - 22.5).abs() < 1e-12 && roof.twist == 0.8);
        let mid = g.cross_section(90.0).unwrap();
        assert!((mid.semi_a - 12.5).abs() < 1e-12 && (mid.semi_b - 18.75).abs() < 1e-12 && (mid.twist - 0.4).abs() < 1e-15);
        assert!(matches!(g.cross_section(181.0), Err(LoadError::Range(_))));
        assert!(g.cross_section(-1.0).is_err());
    }

    #[test]
    fn projected_width_examples() {
        let c = CrossSection { semi_a: 3.0, semi_b: 3.0, twist: 0.3 };
        for k in 0..8 {
            assert!((c.projected_width(k as f64) - 6.0).abs() < 1e-12);
        }
        let e = CrossSection { semi_a: 2.0_f64, semi_b: 1.0, twist: 0.0 };
        assert!((e.projected_width(0.0) - 2.0).abs() < 1e-12);
        assert!((e.projected_width(PI / 4.0) - 10.0_f64.sqrt()).abs() < 1e-12);
        assert!((e.projected_width(PI / 2.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_wind_zero_moment() {
        let s = base_moment_series(&circle(), &ZeroInflow, &LoadConfig::default()).unwrap();
        assert!(s.norm.values().iter().all(|&m| m == 0.0));
        assert_eq!(s.norm.len(), 301);
    }

    #[test]
    fn quadratic_speed_scaling() {
        let g = BuildingGeometry::<f64>::reference(Design::new(0.5, 22.0)).unwrap();
        let cfg = LoadConfig::default();
        let a = base_moment_series(&g, &UniformInflow { velocity: [8.0, 3.0, 0.0] }, &cfg).unwrap();
        let b = base_moment_series(&g, &UniformInflow { velocity: [24.0, 9.0, 0.0] }, &cfg).unwrap();
        let ra = a.norm.values()[0];
        assert!((b.norm.values()[0] - 9.0 * ra).abs() < 1e-9 * ra);
    }

    #[test]
    fn window_outside_box_is_a_range_error() {
        use crate::turbulence::{GridSpec, SpectralParams};
        let grid = GridSpec::new([8, 2, 8], [80.0, 20.0, 256.0]).unwrap();
        let b = TurbulenceBox::zeros(grid, SpectralParams::new(1.0, 10.0, 0.0).unwrap());
        let sc = WindScenario::new(1.0, 0.0, 0.05, 0.5).unwrap();
        let inflow = ScenarioInflow::new(sc, MeanProfileConfig::default(), &b, false).unwrap();
        assert!(matches!(base_moment_series(&circle(), &inflow, &LoadConfig::default()), Err(LoadError::Range(_))));
        let wrapped = ScenarioInflow { wrap: true, ..inflow };
        let s = base_moment_series(&circle(), &wrapped, &LoadConfig::default()).unwrap();
        let laminar = MeanProfileInflow { scenario: sc, profile: MeanProfileConfig::default() };
        let m = base_moment_series(&circle(), &laminar, &LoadConfig::default()).unwrap();
        assert_eq!(s.norm, m.norm);
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let cfg = LoadConfig { window: (0.0, 1.0), dt: 0.5, ..Default::default() };
        let s = base_moment_series(&circle(), &UniformInflow { velocity: [10.0, 0.0, 0.0] }, &cfg).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,Mx,My,Mz,Mnorm");
        assert_eq!(lines.len(), 4);
    }
}
