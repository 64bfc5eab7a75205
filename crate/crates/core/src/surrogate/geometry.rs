use serde::{Deserialize, Serialize};

use super::LoadError;
use crate::scalar::Real;

/// Design variables: roof twist `ψ` (radians) and roof diameter `a` (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct Design<T> {
    pub twist: T,
    pub roof_minor: T,
}

impl<T: Real> Design<T> {
    pub fn new(twist: T, roof_minor: T) -> Self {
        Self { twist, roof_minor }
    }
}

/// Second roof diameter `b = 4A/(πa)` keeping the roof area `πab/4 = A`.
pub fn enforce_area_constraint<T: Real>(a: T, area: T) -> Result<T, LoadError> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(LoadError::Domain(format!("roof diameter must be positive, got {a}")));
    }
    if !(area > T::zero()) {
        return Err(LoadError::Domain(format!("roof area must be positive, got {area}")));
    }
    Ok(T::lit(4.0) * area / (T::PI() * a))
}

/// Elliptic section at one height: semi-axis `semi_a` lies along the local
/// axis rotated by `twist` from the global x-axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSection<T> {
    pub semi_a: T,
    pub semi_b: T,
    pub twist: T,
}

impl<T: Real> CrossSection<T> {
    /// Flow angle measured in the section frame.
    #[inline]
    fn local_angle(&self, flow_angle: T) -> T {
        flow_angle - self.twist
    }

    /// Width `2√(p² sin²φ′ + q² cos²φ′)` seen by a flow at global angle `φ`.
    pub fn projected_width(&self, flow_angle: T) -> T {
        let (s, c) = self.local_angle(flow_angle).sin_cos();
        let (p, q) = (self.semi_a, self.semi_b);
        T::lit(2.0) * (p * p * s * s + q * q * c * c).sqrt()
    }

    /// Half extent of the section along the flow.
    pub fn along_half_extent(&self, flow_angle: T) -> T {
        let (s, c) = self.local_angle(flow_angle).sin_cos();
        let (p, q) = (self.semi_a, self.semi_b);
        (p * p * c * c + q * q * s * s).sqrt()
    }
}

/// Tapered, twisted elliptic tower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct BuildingGeometry<T> {
    /// Height `H` (m).
    pub height: T,
    /// Base diameters along the local `a` and `b` axes (m).
    pub base_diameters: [T; 2],
    /// Fixed roof area `A` (m²).
    pub roof_area: T,
    /// Rotation of the base section from the global x-axis (radians).
    pub orientation: T,
    pub n_strips: usize,
    pub design: Design<T>,
}

impl<T: Real> BuildingGeometry<T> {
    pub fn new(height: T, base_diameters: [T; 2], roof_area: T, n_strips: usize, design: Design<T>) -> Result<Self, LoadError> {
        let g = Self {
            height,
            base_diameters,
            roof_area,
            orientation: T::zero(),
            n_strips,
            design,
        };
        g.validate()?;
        Ok(g)
    }

    /// 180 m tower with a 30 m circular base and roof area `225π` m².
    pub fn reference(design: Design<T>) -> Result<Self, LoadError> {
        Self::new(T::lit(180.0), [T::lit(30.0); 2], T::lit(225.0) * T::PI(), 32, design)
    }

    pub fn validate(&self) -> Result<(), LoadError> {
        if !(self.height > T::zero()) {
            return Err(LoadError::Argument("height must be positive".into()));
        }
        if self.base_diameters.iter().any(|d| !(*d > T::zero())) {
            return Err(LoadError::Argument("base diameters must be positive".into()));
        }
        if self.n_strips < 2 {
            return Err(LoadError::Argument("at least 2 strips required".into()));
        }
        if !self.design.twist.is_finite() {
            return Err(LoadError::Argument("twist must be finite".into()));
        }
        enforce_area_constraint(self.design.roof_minor, self.roof_area)?;
        Ok(())
    }

    pub fn with_design(&self, design: Design<T>) -> Result<Self, LoadError> {
        let g = Self { design, ..self.clone() };
        g.validate()?;
        Ok(g)
    }

    pub fn with_strips(&self, n_strips: usize) -> Result<Self, LoadError> {
        let g = Self { n_strips, ..self.clone() };
        g.validate()?;
        Ok(g)
    }

    pub fn roof_diameters(&self) -> Result<[T; 2], LoadError> {
        let a = self.design.roof_minor;
        Ok([a, enforce_area_constraint(a, self.roof_area)?])
    }

    /// Section at height `z`: semi-axes interpolate linearly from base to roof,
    /// twist grows linearly to `ψ` at the roof.
    pub fn cross_section(&self, z: T) -> Result<CrossSection<T>, LoadError> {
        if !(z >= T::zero() && z <= self.height) {
            return Err(LoadError::Range(format!("height {z} outside [0, {}]", self.height)));
        }
        let s = z / self.height;
        let roof = self.roof_diameters()?;
        let half = T::lit(0.5);
        let lerp = |base: T, top: T| half * (base + (top - base) * s);
        Ok(CrossSection {
            semi_a: lerp(self.base_diameters[0], roof[0]),
            semi_b: lerp(self.base_diameters[1], roof[1]),
            twist: self.orientation + self.design.twist * s,
        })
    }

    pub fn projected_width(&self, z: T, flow_angle: T) -> Result<T, LoadError> {
        Ok(self.cross_section(z)?.projected_width(flow_angle))
    }

    /// Strip mid-heights and thickness `Δz = H/n`.
    pub fn strips(&self) -> (Vec<T>, T) {
        let n = T::from_usize_lossy(self.n_strips);
        let dz = self.height / n;
        let mids = (0..self.n_strips)
            .map(|j| (T::from_usize_lossy(j) + T::lit(0.5)) * dz)
            .collect();
        (mids, dz)
    }
}
