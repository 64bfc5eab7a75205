use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CopulaError;

/// Empirical copula of transformed samples `(u_i, v_i) ∈ [0,1]²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct EmpiricalCopula {
    pairs: Vec<[f64; 2]>,
}

impl TryFrom<Vec<[f64; 2]>> for EmpiricalCopula {
    type Error = CopulaError;
    fn try_from(pairs: Vec<[f64; 2]>) -> Result<Self, CopulaError> {
        Self::new(pairs)
    }
}

impl From<EmpiricalCopula> for Vec<[f64; 2]> {
    fn from(c: EmpiricalCopula) -> Self {
        c.pairs
    }
}

fn reflect_unit(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else if x > 1.0 {
        2.0 - x
    } else {
        x
    }
}

impl EmpiricalCopula {
    pub fn new(pairs: Vec<[f64; 2]>) -> Result<Self, CopulaError> {
        if pairs.len() < 2 {
            return Err(CopulaError::Argument(format!(
                "empirical copula needs at least 2 pairs, got {}",
                pairs.len()
            )));
        }
        if let Some(p) = pairs.iter().find(|p| !(0.0..=1.0).contains(&p[0]) || !(0.0..=1.0).contains(&p[1])) {
            return Err(CopulaError::Argument(format!("pair {p:?} outside the unit square")));
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[[f64; 2]] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `Ĉ(u, v) = (1/n) Σ 1[u_i ≤ u, v_i ≤ v]`.
    pub fn cdf(&self, u: f64, v: f64) -> Result<f64, CopulaError> {
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return Err(CopulaError::Argument(format!("({u}, {v}) outside the unit square")));
        }
        let hits = self.pairs.iter().filter(|p| p[0] <= u && p[1] <= v).count();
        Ok(hits as f64 / self.pairs.len() as f64)
    }

    /// Draws a stored pair uniformly and jitters each coordinate uniformly over
    /// a width of `1/n`, reflecting at the unit-square edges.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<[f64; 2], CopulaError> {
        if self.pairs.is_empty() {
            return Err(CopulaError::State("empty copula".into()));
        }
        let n = self.pairs.len();
        let [u, v] = self.pairs[rng.random_range(0..n)];
        let w = 1.0 / n as f64;
        let du = (rng.random::<f64>() - 0.5) * w;
        let dv = (rng.random::<f64>() - 0.5) * w;
        Ok([reflect_unit(u + du), reflect_unit(v + dv)])
    }

    /// Copy with the second coordinate permuted, destroying the dependence
    /// while keeping both margins.
    pub fn with_independence<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let mut vs: Vec<f64> = self.pairs.iter().map(|p| p[1]).collect();
        for i in (1..vs.len()).rev() {
            let j = rng.random_range(0..=i);
            vs.swap(i, j);
        }
        Self {
            pairs: self.pairs.iter().zip(vs).map(|(p, v)| [p[0], v]).collect(),
        }
    }
}
