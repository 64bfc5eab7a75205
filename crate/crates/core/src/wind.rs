//! Mean wind profile, scenario random variables and turbulence-intensity diagnostics.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::copula::JointWindModel;
use crate::scalar::{wrap_angle, Real};
use crate::seeding::unit_to_seed;
use crate::turbulence::TurbulenceBox;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("distribution not calibrated: {0}")]
    State(String),
}

/// Constants of the quasi-logarithmic mean profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct MeanProfileConfig<T> {
    /// von Kármán constant.
    pub kappa: T,
    /// Coriolis parameter (1/s).
    pub coriolis: T,
    /// Height below which the profile is held constant (m).
    pub z_min: T,
    /// Height of the calibration data (m).
    pub reference_height: T,
}

impl<T: Real> Default for MeanProfileConfig<T> {
    fn default() -> Self {
        Self {
            kappa: T::lit(0.41),
            coriolis: T::lit(1e-4),
            z_min: T::lit(2.0),
            reference_height: T::lit(80.0),
        }
    }
}

impl<T: Real> MeanProfileConfig<T> {
    pub fn validate(&self) -> Result<(), WindError> {
        if !(self.kappa > T::zero()) {
            return Err(WindError::Argument("kappa must be positive".into()));
        }
        if !(self.z_min > T::zero()) || !(self.reference_height > T::zero()) {
            return Err(WindError::Argument("heights must be positive".into()));
        }
        Ok(())
    }

    /// Coriolis correction `34.5 f z`.
    #[inline]
    fn coriolis_term(&self, z: T) -> T {
        T::lit(34.5) * self.coriolis * z
    }
}

/// One draw of the uncertain environment: friction velocity, direction,
/// roughness length and the unit-interval turbulence seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct WindScenario<T> {
    pub friction_velocity: T,
    /// Radians in `[0, 2π)`.
    pub direction: T,
    pub roughness_length: T,
    /// Turbulence seed variable in `[0, 1]`.
    pub seed: T,
}

impl<T: Real> WindScenario<T> {
    /// Validates and normalizes the direction into `[0, 2π)`.
    pub fn new(friction_velocity: T, direction: T, roughness_length: T, seed: T) -> Result<Self, WindError> {
        if !(friction_velocity > T::zero()) || !friction_velocity.is_finite() {
            return Err(WindError::Domain(format!("friction velocity must be positive, got {friction_velocity}")));
        }
        if !(roughness_length > T::zero()) || !roughness_length.is_finite() {
            return Err(WindError::Domain(format!("roughness length must be positive, got {roughness_length}")));
        }
        if !direction.is_finite() {
            return Err(WindError::Domain("direction must be finite".into()));
        }
        if !(seed >= T::zero() && seed <= T::one()) {
            return Err(WindError::Domain(format!("seed variable must lie in [0, 1], got {seed}")));
        }
        Ok(Self {
            friction_velocity,
            direction: wrap_angle(direction),
            roughness_length,
            seed,
        })
    }

    /// 64-bit generator seed derived from `r` by scaling with 2^64 and truncating.
    pub fn generator_seed(&self) -> u64 {
        unit_to_seed(self.seed.as_f64())
    }

    /// Horizontal unit vector `(cos θ, sin θ, 0)`.
    pub fn direction_vector(&self) -> [T; 3] {
        let (s, c) = self.direction.sin_cos();
        [c, s, T::zero()]
    }
}

fn check_positive<T: Real>(name: &str, v: T) -> Result<(), WindError> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(WindError::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Mean wind speed `(u★ ln(z/z0) + 34.5 f z)/κ`, held at its `z_min` value below `z_min`.
pub fn mean_wind_speed<T: Real>(z: T, friction_velocity: T, z0: T, cfg: &MeanProfileConfig<T>) -> Result<T, WindError> {
    check_positive("height", z)?;
    check_positive("friction velocity", friction_velocity)?;
    check_positive("roughness length", z0)?;
    let z = z.max(cfg.z_min);
    Ok((friction_velocity * (z / z0).ln() + cfg.coriolis_term(z)) / cfg.kappa)
}

/// Mean velocity vector `ū(z) e(θ)`.
pub fn mean_wind_vector<T: Real>(z: T, scenario: &WindScenario<T>, cfg: &MeanProfileConfig<T>) -> Result<[T; 3], WindError> {
    let speed = mean_wind_speed(z, scenario.friction_velocity, scenario.roughness_length, cfg)?;
    let e = scenario.direction_vector();
    Ok([speed * e[0], speed * e[1], T::zero()])
}

/// Inverts the profile at height `z`: `u★ = (κū − 34.5 f z)/ln(z/z0)`.
///
/// Heights below `z_min` are evaluated at `z_min`, matching the clamped profile.
pub fn friction_velocity_from_speed<T: Real>(
    mean_speed: T,
    z: T,
    z0: T,
    cfg: &MeanProfileConfig<T>,
) -> Result<T, WindError> {
    check_positive("height", z)?;
    check_positive("roughness length", z0)?;
    if !mean_speed.is_finite() {
        return Err(WindError::Domain("mean speed must be finite".into()));
    }
    let z = z.max(cfg.z_min);
    if !(z > z0) {
        return Err(WindError::Domain(format!("height {z} must exceed roughness length {z0}")));
    }
    let numerator = cfg.kappa * mean_speed - cfg.coriolis_term(z);
    if !(numerator > T::zero()) {
        return Err(WindError::Domain(format!(
            "mean speed {mean_speed} at z = {z} implies a non-positive friction velocity"
        )));
    }
    Ok(numerator / (z / z0).ln())
}

/// Codebook turbulence-intensity reference `1/ln(z/z0)` (with `z` clamped at `z_min`).
pub fn reference_intensity<T: Real>(z: T, z0: T, z_min: T) -> T {
    T::one() / (z.max(z_min) / z0).ln()
}

/// Per-height turbulence intensity `I_i(z) = σ_i(z)/ū(z)`.
///
/// `σ_i` is the pooled (time, lateral position, ensemble) standard deviation of
/// fluctuation component `i`, sampled on the box at height `z` with linear
/// interpolation between vertical planes.
pub fn turbulence_intensity_profile<F>(
    samples: &[TurbulenceBox],
    mean_speed: F,
    heights: &[f64],
) -> Result<Vec<[f64; 3]>, WindError>
where
    F: Fn(f64) -> f64,
{
    if samples.is_empty() {
        return Err(WindError::Argument("empty turbulence sample set".into()));
    }
    let mut out = Vec::with_capacity(heights.len());
    for &z in heights {
        let mut acc = [RunningMoments::default(); 3];
        for b in samples {
            let grid = &b.grid;
            let dz = grid.spacing(2);
            let extent = dz * (grid.counts[2] - 1) as f64;
            if !(0.0..=extent).contains(&z) {
                return Err(WindError::Argument(format!("height {z} outside box vertical extent [0, {extent}]")));
            }
            let f = z / dz;
            let k0 = (f.floor() as usize).min(grid.counts[2] - 1);
            let k1 = (k0 + 1).min(grid.counts[2] - 1);
            let w = f - k0 as f64;
            for i in 0..grid.counts[0] {
                for j in 0..grid.counts[1] {
                    for (c, m) in acc.iter_mut().enumerate() {
                        let v = (1.0 - w) * b.get(c, i, j, k0) + w * b.get(c, i, j, k1);
                        m.push(v);
                    }
                }
            }
        }
        let u = mean_speed(z);
        if !(u > 0.0) {
            return Err(WindError::Domain(format!("mean speed at z = {z} must be positive")));
        }
        out.push([acc[0].std() / u, acc[1].std() / u, acc[2].std() / u]);
    }
    Ok(out)
}

#[derive(Debug, Default, Clone, Copy)]
struct RunningMoments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn std(&self) -> f64 {
        if self.n < 2.0 {
            0.0
        } else {
            (self.m2 / (self.n - 1.0)).sqrt()
        }
    }
}

/// Nominal roughness length used for the predominant-wind scenario.
pub const NOMINAL_ROUGHNESS: f64 = 0.05;
/// Fixed turbulence seed variable of the predominant-wind scenario.
pub const PWD_SEED: f64 = 0.5;

/// Which roughness value stands in for `E[z0]` in the predominant-wind scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PwdRoughness {
    /// The nominal terrain-category value 0.05 m.
    #[default]
    Nominal,
    /// The mean of the roughness distribution, `(z_L + z_U)/2`.
    DistributionMean,
}

/// Joint law of a [`WindScenario`].
#[derive(Debug, Clone)]
pub struct ScenarioDistribution {
    pub model: Option<JointWindModel>,
    pub roughness_bounds: (f64, f64),
    pub profile: MeanProfileConfig<f64>,
    pub pwd_roughness: PwdRoughness,
}

impl ScenarioDistribution {
    pub fn new(model: JointWindModel, profile: MeanProfileConfig<f64>) -> Self {
        Self {
            model: Some(model),
            roughness_bounds: (0.01, 0.1),
            profile,
            pwd_roughness: PwdRoughness::Nominal,
        }
    }

    /// A distribution without a calibrated speed/direction model.
    pub fn uncalibrated(profile: MeanProfileConfig<f64>) -> Self {
        Self {
            model: None,
            roughness_bounds: (0.01, 0.1),
            profile,
            pwd_roughness: PwdRoughness::Nominal,
        }
    }

    pub fn with_roughness_bounds(mut self, lower: f64, upper: f64) -> Result<Self, WindError> {
        if !(lower > 0.0 && lower < upper) {
            return Err(WindError::Argument(format!("invalid roughness bounds ({lower}, {upper})")));
        }
        if !(self.profile.z_min > upper) {
            return Err(WindError::Argument("z_min must exceed the roughness upper bound".into()));
        }
        self.roughness_bounds = (lower, upper);
        Ok(self)
    }

    fn model(&self) -> Result<&JointWindModel, WindError> {
        self.model
            .as_ref()
            .ok_or_else(|| WindError::State("no calibrated speed/direction model".into()))
    }

    pub fn roughness_mean(&self) -> f64 {
        0.5 * (self.roughness_bounds.0 + self.roughness_bounds.1)
    }

    /// `E[u★]` under the calibrated model: the mean reference-height speed
    /// converted through the profile, averaged over the roughness law.
    pub fn expected_friction_velocity(&self) -> Result<f64, WindError> {
        let model = self.model()?;
        let speed = model.speed.mean();
        let (lo, hi) = self.roughness_bounds;
        // Gauss-Legendre on the uniform roughness law
        let nodes = [
            (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
            (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
            (0.0, 0.568_888_888_888_888_9),
            (0.538_469_310_105_683, 0.478_628_670_499_366_5),
            (0.906_179_845_938_664, 0.236_926_885_056_189_1),
        ];
        let mut acc = 0.0;
        for (x, w) in nodes {
            let z0 = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
            acc += 0.5 * w * friction_velocity_from_speed(speed, self.profile.reference_height, z0, &self.profile)?;
        }
        Ok(acc)
    }

    /// Draws one scenario.
    ///
    /// `(θ, ū(z_ref))` come jointly from the copula model and are converted to
    /// `u★`; pairs implying a non-positive `u★` are redrawn. `z0` and `r` are
    /// independent uniforms.
    pub fn sample_scenario<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<WindScenario<f64>, WindError> {
        let model = self.model()?;
        let (lo, hi) = self.roughness_bounds;
        let z0 = lo + (hi - lo) * rng.random::<f64>();
        let r = rng.random::<f64>();
        for _ in 0..10_000 {
            let (theta, speed) = model
                .sample_joint(rng)
                .map_err(|e| WindError::State(e.to_string()))?;
            if let Ok(u_star) = friction_velocity_from_speed(speed, self.profile.reference_height, z0, &self.profile) {
                return WindScenario::new(u_star, theta, z0, r);
            }
        }
        Err(WindError::Domain("could not draw a positive friction velocity".into()))
    }

    /// Deterministic predominant-wind scenario `(E[u★], θ_PWD, E[z0], r_PWD)` with
    /// `θ_PWD` the mode of the fitted direction marginal.
    pub fn pwd_scenario(&self) -> Result<WindScenario<f64>, WindError> {
        let model = self.model()?;
        let theta = model.direction.mode();
        let z0 = match self.pwd_roughness {
            PwdRoughness::Nominal => NOMINAL_ROUGHNESS,
            PwdRoughness::DistributionMean => self.roughness_mean(),
        };
        WindScenario::new(self.expected_friction_velocity()?, theta, z0, PWD_SEED)
    }
}
