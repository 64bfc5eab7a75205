use rand_distr::{Distribution, StandardNormal};

use super::{OptimizeError, SampledProblem};
use crate::risk::TimeSeries;
use crate::seeding::{child_rng, stream};

/// Quadratic with a known minimizer and multiplicative gradient noise:
/// `J(Z, ξ) = ½ Σ c_j (Z_j − Z★_j)² + offset + σ ξ·(Z − Z★)`, `ξ ~ N(0, I)`.
///
/// The expectation is minimized at `Z★`; per-sample gradients scatter by `σ`
/// around the true gradient, so the norm test fails near the optimum and
/// forces batch growth.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyQuadratic {
    pub optimum: Vec<f64>,
    pub curvature: Vec<f64>,
    pub offset: f64,
    pub noise: f64,
    pub master_seed: u64,
}

impl NoisyQuadratic {
    pub fn new(optimum: Vec<f64>, noise: f64, master_seed: u64) -> Self {
        let curvature = vec![1.0; optimum.len()];
        Self {
            optimum,
            curvature,
            offset: 1.0,
            noise,
            master_seed,
        }
    }

    /// Expected objective `½ Σ c_j (Z_j − Z★_j)² + offset`.
    pub fn expected(&self, design: &[f64]) -> f64 {
        let q: f64 = design
            .iter()
            .zip(&self.optimum)
            .zip(&self.curvature)
            .map(|((z, o), c)| c * (z - o) * (z - o))
            .sum();
        0.5 * q + self.offset
    }

    pub fn distance_to_optimum(&self, design: &[f64]) -> f64 {
        design
            .iter()
            .zip(&self.optimum)
            .map(|(z, o)| (z - o) * (z - o))
            .sum::<f64>()
            .sqrt()
    }
}

impl SampledProblem for NoisyQuadratic {
    type Sample = Vec<f64>;

    fn dimension(&self) -> usize {
        self.optimum.len()
    }

    fn draw(&self, index: u64) -> Result<Vec<f64>, OptimizeError> {
        let mut rng = child_rng(self.master_seed, stream::BENCHMARK, index);
        Ok((0..self.dimension()).map(|_| StandardNormal.sample(&mut rng)).collect())
    }

    fn evaluate(&self, design: &[f64], xi: &Vec<f64>) -> Result<TimeSeries<f64>, OptimizeError> {
        if design.len() != self.dimension() {
            return Err(OptimizeError::Argument("design dimension mismatch".into()));
        }
        let noise: f64 = design
            .iter()
            .zip(&self.optimum)
            .zip(xi)
            .map(|((z, o), x)| x * (z - o))
            .sum();
        let j = self.expected(design) + self.noise * noise;
        Ok(TimeSeries::constant(0.0, 1.0, j)?)
    }
}
