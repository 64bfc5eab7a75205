//! Risk-averse shape optimization of tall buildings under uncertain wind.
//!
//! Calibrated stochastic wind scenarios feed a quasi-steady strip load model;
//! designs (roof twist and taper) are optimized for the expected or the
//! CVaR-weighted base moment by stochastic gradient descent with adaptive
//! sampling.

pub mod copula;
pub mod optimizer;
pub mod risk;
pub mod scalar;
pub mod seeding;
pub mod special;
pub mod stats;
pub mod surrogate;
pub mod synthetic;
pub mod turbulence;
pub mod wind;
pub mod workflow;

use thiserror::Error;

pub use copula::{CopulaError, EmpiricalCopula, JointWindModel, VonMisesMixture, WeibullMarginal, WindRecord};
pub use optimizer::{ObjectiveKind, ObjectiveSpec, OptimizationRecord, OptimizeError, OptimizerConfig};
pub use risk::RiskError;
pub use scalar::Real;
pub use surrogate::LoadError;
pub use turbulence::{GridSpec, SpectralParams, TurbulenceBox, TurbulenceError};
pub use wind::{ScenarioDistribution, WindError};
pub use workflow::WorkflowError;

/// Double-precision instantiations of the generic types.
pub type WindScenario = wind::WindScenario<f64>;
pub type MeanProfileConfig = wind::MeanProfileConfig<f64>;
pub type TimeSeries = risk::TimeSeries<f64>;
pub type Design = surrogate::Design<f64>;
pub type BuildingGeometry = surrogate::BuildingGeometry<f64>;
pub type LoadConfig = surrogate::LoadConfig<f64>;
pub type LoadSeries = surrogate::LoadSeries<f64>;

/// Single-precision instantiations for memory-bound batch evaluation.
pub mod single {
    pub type WindScenario = crate::wind::WindScenario<f32>;
    pub type MeanProfileConfig = crate::wind::MeanProfileConfig<f32>;
    pub type TimeSeries = crate::risk::TimeSeries<f32>;
    pub type Design = crate::surrogate::Design<f32>;
    pub type BuildingGeometry = crate::surrogate::BuildingGeometry<f32>;
    pub type LoadConfig = crate::surrogate::LoadConfig<f32>;
    pub type LoadSeries = crate::surrogate::LoadSeries<f32>;
}

/// Any error raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Wind(#[from] WindError),
    #[error(transparent)]
    Copula(#[from] CopulaError),
    #[error(transparent)]
    Turbulence(#[from] TurbulenceError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
}
