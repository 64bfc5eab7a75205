//! Synthetic turbulent fluctuations from the Mann spectral model on a periodic grid.

mod io;
mod spectrum;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{read_box, read_box_file, write_box, write_box_file, BOX_FORMAT_VERSION, BOX_MAGIC};
pub use spectrum::{
    eddy_lifetime, factorize_spectrum, frobenius_norm, gram, spectral_tensor, von_karman_energy, Matrix3,
    SpectralParams, ZERO_MATRIX,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TurbulenceError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed box file: {0}")]
    Format(String),
}

/// Periodic grid; the first axis doubles as time through frozen advection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub counts: [usize; 3],
    /// Physical periods `(L1, L2, L3)` in m.
    pub extents: [f64; 3],
}

impl GridSpec {
    pub fn new(counts: [usize; 3], extents: [f64; 3]) -> Result<Self, TurbulenceError> {
        let g = Self { counts, extents };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), TurbulenceError> {
        for (n, l) in self.counts.iter().zip(self.extents) {
            if *n < 2 || !n.is_power_of_two() {
                return Err(TurbulenceError::Argument(format!("grid count {n} must be a power of two ≥ 2")));
            }
            if !(l > 0.0 && l.is_finite()) {
                return Err(TurbulenceError::Argument(format!("grid extent {l} must be positive")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / self.counts[axis] as f64
    }

    /// Wavenumber-cell volume `(2π)³/(L1 L2 L3)`.
    pub fn cell_volume(&self) -> f64 {
        (2.0 * PI).powi(3) / (self.extents[0] * self.extents[1] * self.extents[2])
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.counts[1] + j) * self.counts[2] + k
    }

    /// Signed mode number of FFT index `i` on `axis`, `None` at the Nyquist index.
    fn mode(&self, axis: usize, i: usize) -> Option<i64> {
        let n = self.counts[axis];
        match i.cmp(&(n / 2)) {
            std::cmp::Ordering::Less => Some(i as i64),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(i as i64 - n as i64),
        }
    }

    /// Wavevector of a resolved grid mode; `None` for Nyquist planes and `k = 0`.
    pub fn wavevector(&self, i: usize, j: usize, k: usize) -> Option<[f64; 3]> {
        let m = [self.mode(0, i)?, self.mode(1, j)?, self.mode(2, k)?];
        if m == [0, 0, 0] {
            return None;
        }
        Some([0, 1, 2].map(|a| 2.0 * PI * m[a] as f64 / self.extents[a]))
    }

    fn partner(&self, i: usize, j: usize, k: usize) -> usize {
        let [n1, n2, n3] = self.counts;
        self.index((n1 - i) % n1, (n2 - j) % n2, (n3 - k) % n3)
    }
}

/// Real three-component fluctuation field on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TurbulenceBox {
    pub grid: GridSpec,
    pub params: SpectralParams,
    pub seed: u64,
    /// Component-major values, `data[c·N + index(i, j, k)]`.
    data: Vec<f64>,
}

impl TurbulenceBox {
    /// Wraps raw component-major data.
    pub fn from_data(grid: GridSpec, params: SpectralParams, seed: u64, data: Vec<f64>) -> Result<Self, TurbulenceError> {
        grid.validate()?;
        if data.len() != 3 * grid.len() {
            return Err(TurbulenceError::Argument(format!(
                "expected {} values, got {}",
                3 * grid.len(),
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(TurbulenceError::Numeric("non-finite fluctuation value".into()));
        }
        Ok(Self { grid, params, seed, data })
    }

    /// A box of zeros, useful as a laminar inflow.
    pub fn zeros(grid: GridSpec, params: SpectralParams) -> Self {
        Self {
            grid,
            params,
            seed: 0,
            data: vec![0.0; 3 * grid.len()],
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.grid.len();
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: usize, i: usize, j: usize, k: usize) -> f64 {
        self.data[c * self.grid.len() + self.grid.index(i, j, k)]
    }

    /// Returns a copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            data: self.data.iter().map(|x| x * factor).collect(),
            ..self.clone()
        }
    }

    /// Spatial variance of each component over the box.
    pub fn component_variance(&self) -> [f64; 3] {
        [0, 1, 2].map(|c| {
            let v = self.component(c);
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
        })
    }

    /// Time extent `L1/U` covered by the box under frozen advection.
    pub fn time_extent(&self, advection_speed: f64) -> f64 {
        self.grid.extents[0] / advection_speed
    }

    /// Periodic trilinear interpolation at physical position `(x, y, z)`.
    pub fn probe(&self, x: f64, y: f64, z: f64) -> [f64; 3] {
        let pos = [x, y, z];
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        let mut w = [0.0; 3];
        for a in 0..3 {
            let n = self.grid.counts[a];
            let f = (pos[a] / self.grid.spacing(a)).rem_euclid(n as f64);
            let i0 = (f.floor() as usize).min(n - 1);
            lo[a] = i0;
            hi[a] = (i0 + 1) % n;
            w[a] = f - i0 as f64;
        }
        let mut out = [0.0; 3];
        for (c, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (ii, wi) in [(lo[0], 1.0 - w[0]), (hi[0], w[0])] {
                for (jj, wj) in [(lo[1], 1.0 - w[1]), (hi[1], w[1])] {
                    for (kk, wk) in [(lo[2], 1.0 - w[2]), (hi[2], w[2])] {
                        let weight = wi * wj * wk;
                        if weight != 0.0 {
                            acc += weight * self.get(c, ii, jj, kk);
                        }
                    }
                }
            }
            *o = acc;
        }
        out
    }
}

/// A `(y, z)` plane of three-component fluctuations.
#[derive(Debug, Clone, PartialEq)]
pub struct InletPlane {
    pub counts: [usize; 2],
    /// Row-major over `(j, k)`.
    pub values: Vec<[f64; 3]>,
}

impl InletPlane {
    pub fn get(&self, j: usize, k: usize) -> [f64; 3] {
        self.values[j * self.counts[1] + k]
    }
}

/// Inlet plane at time `t`, read at first-axis position `x = t·U` with linear
/// interpolation between adjacent planes.
///
/// Without `wrap`, `x` must lie in `[0, (N1 − 1)Δx]`; with `wrap` the box is
/// treated as periodic in time with period `L1/U`.
pub fn slice_inlet(
    b: &TurbulenceBox,
    t: f64,
    advection_speed: f64,
    wrap: bool,
) -> Result<InletPlane, TurbulenceError> {
    if !(advection_speed > 0.0 && advection_speed.is_finite()) {
        return Err(TurbulenceError::Argument("advection speed must be positive".into()));
    }
    if !t.is_finite() {
        return Err(TurbulenceError::Range("time must be finite".into()));
    }
    let n1 = b.grid.counts[0];
    let dx = b.grid.spacing(0);
    let f = t * advection_speed / dx;
    let (i0, i1, w) = if wrap {
        let f = f.rem_euclid(n1 as f64);
        let i0 = (f.floor() as usize).min(n1 - 1);
        (i0, (i0 + 1) % n1, f - i0 as f64)
    } else {
        let last = (n1 - 1) as f64;
        if !(0.0..=last).contains(&f) {
            return Err(TurbulenceError::Range(format!(
                "t = {t} outside box time extent [0, {}]",
                last * dx / advection_speed
            )));
        }
        let i0 = (f.floor() as usize).min(n1 - 2);
        (i0, i0 + 1, f - i0 as f64)
    };
    let [_, n2, n3] = b.grid.counts;
    let mut values = Vec::with_capacity(n2 * n3);
    for j in 0..n2 {
        for k in 0..n3 {
            values.push([0, 1, 2].map(|c| {
                let a = b.get(c, i0, j, k);
                if w == 0.0 {
                    a
                } else {
                    (1.0 - w) * a + w * b.get(c, i1, j, k)
                }
            }));
        }
    }
    Ok(InletPlane { counts: [n2, n3], values })
}

/// Expected per-component variance `Σ Φ_ii(k) ΔV` over the resolved modes of `grid`.
pub fn discrete_band_variance(params: &SpectralParams, grid: &GridSpec) -> Result<[f64; 3], TurbulenceError> {
    params.validate()?;
    grid.validate()?;
    let dv = grid.cell_volume();
    let mut acc = [0.0; 3];
    let [n1, n2, n3] = grid.counts;
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..n3 {
                if let Some(kv) = grid.wavevector(i, j, k) {
                    let phi = spectral_tensor(kv, params);
                    for (c, a) in acc.iter_mut().enumerate() {
                        *a += phi[c][c].re * dv;
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// Returns `params` with the energy coefficient chosen so that the resolved
/// along-wind standard deviation equals `target_sigma_u`.
///
/// The variance is linear in the energy coefficient, so this is closed form.
pub fn calibrate_energy(
    target_sigma_u: f64,
    params: &SpectralParams,
    grid: &GridSpec,
) -> Result<SpectralParams, TurbulenceError> {
    if !(target_sigma_u > 0.0 && target_sigma_u.is_finite()) {
        return Err(TurbulenceError::Argument("target standard deviation must be positive".into()));
    }
    let unit = params.with_energy(1.0);
    let var = discrete_band_variance(&unit, grid)?[0];
    if !(var > 0.0) {
        return Err(TurbulenceError::Numeric("grid resolves no along-wind energy".into()));
    }
    Ok(unit.with_energy(target_sigma_u * target_sigma_u / var))
}

/// Box generator with the spectral factors of one `(params, grid)` pair cached.
#[derive(Debug, Clone)]
pub struct MannGenerator {
    params: SpectralParams,
    grid: GridSpec,
    /// `√ΔV · C(k)` per grid index; zero on unresolved modes.
    factors: Vec<[[f64; 3]; 3]>,
}

impl MannGenerator {
    pub fn new(params: SpectralParams, grid: GridSpec) -> Result<Self, TurbulenceError> {
        params.validate()?;
        grid.validate()?;
        let amp = grid.cell_volume().sqrt();
        let mut factors = vec![[[0.0; 3]; 3]; grid.len()];
        let [n1, n2, n3] = grid.counts;
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    let p = grid.index(i, j, k);
                    let q = grid.partner(i, j, k);
                    if q < p {
                        // conjugate partner already filled; C(−k) = C(k) keeps the field real
                        factors[p] = factors[q];
                        continue;
                    }
                    let Some(kv) = grid.wavevector(i, j, k) else { continue };
                    let c = spectrum::factorize_scaled(&spectral_tensor(kv, &params))?;
                    factors[p] = c.map(|row| row.map(|z| amp * z.re));
                }
            }
        }
        Ok(Self { params, grid, factors })
    }

    pub fn params(&self) -> &SpectralParams {
        &self.params
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Generates the box for `seed`.
    ///
    /// Noise layout: for each grid index in row-major order, three complex
    /// standard normals `(re, im)` are drawn from ChaCha8 seeded by `seed`;
    /// entries whose conjugate partner comes earlier are then overwritten by
    /// that partner's conjugate.
    pub fn generate(&self, seed: u64) -> Result<TurbulenceBox, TurbulenceError> {
        let grid = self.grid;
        let n = grid.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut noise = vec![[Complex64::ZERO; 3]; n];
        for xi in noise.iter_mut() {
            for z in xi.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *z = Complex64::new(re, im) * FRAC_1_SQRT_2;
            }
        }
        let [n1, n2, n3] = grid.counts;
        for i in 0..n1 {
            for j in 0..n2 {
                for k in 0..n3 {
                    let p = grid.index(i, j, k);
                    let q = grid.partner(i, j, k);
                    if q < p {
                        noise[p] = noise[q].map(|z| z.conj());
                    }
                }
            }
        }
        let mut fields = vec![vec![Complex64::ZERO; n]; 3];
        for p in 0..n {
            let c = &self.factors[p];
            let xi = &noise[p];
            for (comp, field) in fields.iter_mut().enumerate() {
                field[p] = c[comp][0] * xi[0] + c[comp][1] * xi[1] + c[comp][2] * xi[2];
            }
        }
        let mut planner = FftPlanner::new();
        let mut data = Vec::with_capacity(3 * n);
        for field in fields.iter_mut() {
            inverse_fft_3d(&mut planner, field, grid.counts);
            let max_re = field.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
            let max_im = field.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            if max_im > 1e-12 * max_re.max(f64::MIN_POSITIVE) {
                return Err(TurbulenceError::Numeric(format!(
                    "imaginary residue {max_im:e} relative to {max_re:e}"
                )));
            }
            data.extend(field.iter().map(|z| z.re));
        }
        TurbulenceBox::from_data(grid, self.params, seed, data)
    }
}

/// Generates one box; see [`MannGenerator::generate`] for the noise layout.
pub fn generate_box(params: &SpectralParams, grid: &GridSpec, seed: u64) -> Result<TurbulenceBox, TurbulenceError> {
    MannGenerator::new(*params, *grid)?.generate(seed)
}

/// Unnormalized inverse DFT `Σ_k û(k) e^{+ik·x}` along all three axes, in place.
fn inverse_fft_3d(planner: &mut FftPlanner<f64>, data: &mut [Complex64], counts: [usize; 3]) {
    let [n1, n2, n3] = counts;
    let f3 = planner.plan_fft_inverse(n3);
    f3.process(data);
    let f2 = planner.plan_fft_inverse(n2);
    let mut line = vec![Complex64::ZERO; n2.max(n1)];
    for i in 0..n1 {
        for k in 0..n3 {
            for j in 0..n2 {
                line[j] = data[(i * n2 + j) * n3 + k];
            }
            f2.process(&mut line[..n2]);
            for j in 0..n2 {
                data[(i * n2 + j) * n3 + k] = line[j];
            }
        }
    }
    let f1 = planner.plan_fft_inverse(n1);
    let stride = n2 * n3;
    for jk in 0..stride {
        for i in 0..n1 {
            line[i] = data[i * stride + jk];
        }
        f1.process(&mut line[..n1]);
        for i in 0..n1 {
            data[i * stride + jk] = line[i];
        }
    }
}
