use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::TurbulenceError;
use crate::special::hypergeometric_2f1_negative;

/// 3×3 complex matrix, row-major.
pub type Matrix3 = [[Complex64; 3]; 3];

pub const ZERO_MATRIX: Matrix3 = [[Complex64::ZERO; 3]; 3];

/// Parameters of the sheared (Mann) velocity-spectrum tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    /// `αε^{2/3}` in m^{4/3}/s².
    pub energy_coefficient: f64,
    /// Length scale `L` in m.
    pub length_scale: f64,
    /// Shear anisotropy `Γ`; zero gives the isotropic von Kármán tensor.
    pub anisotropy: f64,
}

impl SpectralParams {
    pub fn new(energy_coefficient: f64, length_scale: f64, anisotropy: f64) -> Result<Self, TurbulenceError> {
        let p = Self {
            energy_coefficient,
            length_scale,
            anisotropy,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), TurbulenceError> {
        if !(self.energy_coefficient > 0.0 && self.energy_coefficient.is_finite()) {
            return Err(TurbulenceError::Argument("energy coefficient must be positive".into()));
        }
        if !(self.length_scale > 0.0 && self.length_scale.is_finite()) {
            return Err(TurbulenceError::Argument("length scale must be positive".into()));
        }
        if !(self.anisotropy >= 0.0 && self.anisotropy.is_finite()) {
            return Err(TurbulenceError::Argument("anisotropy must be non-negative".into()));
        }
        Ok(())
    }

    /// Same shape with a different energy coefficient.
    pub fn with_energy(&self, energy_coefficient: f64) -> Self {
        Self {
            energy_coefficient,
            ..*self
        }
    }
}

/// Von Kármán energy spectrum `αε^{2/3} L^{5/3} (kL)⁴ / (1 + (kL)²)^{17/6}`.
pub fn von_karman_energy(k: f64, params: &SpectralParams) -> f64 {
    let kl = k * params.length_scale;
    let kl2 = kl * kl;
    params.energy_coefficient * params.length_scale.powf(5.0 / 3.0) * kl2 * kl2 / (1.0 + kl2).powf(17.0 / 6.0)
}

/// Non-dimensional eddy lifetime `β = Γ (kL)^{-2/3} / √₂F₁(1/3, 17/6; 4/3; −(kL)^{-2})`.
pub fn eddy_lifetime(k: f64, params: &SpectralParams) -> f64 {
    if params.anisotropy == 0.0 {
        return 0.0;
    }
    let kl = k * params.length_scale;
    let f = hypergeometric_2f1_negative(1.0 / 3.0, 17.0 / 6.0, 4.0 / 3.0, -1.0 / (kl * kl));
    params.anisotropy * kl.powf(-2.0 / 3.0) / f.sqrt()
}

fn real_matrix(m: [[f64; 3]; 3]) -> Matrix3 {
    m.map(|row| row.map(|x| Complex64::new(x, 0.0)))
}

/// Velocity-spectrum tensor `Φ_ij(k)` of uniformly sheared turbulence, shear
/// acting on the first component along the third axis. The zero wavevector
/// maps to the zero matrix.
pub fn spectral_tensor(k: [f64; 3], params: &SpectralParams) -> Matrix3 {
    let [k1, k2, k3] = k;
    let kk = k1 * k1 + k2 * k2 + k3 * k3;
    if kk == 0.0 {
        return ZERO_MATRIX;
    }
    let kmag = kk.sqrt();
    let beta = eddy_lifetime(kmag, params);
    let k30 = k3 + beta * k1;
    let k0k0 = k1 * k1 + k2 * k2 + k30 * k30;
    let kh2 = k1 * k1 + k2 * k2;
    let e = von_karman_energy(k0k0.sqrt(), params);
    let a = e / (4.0 * PI * k0k0 * k0k0);

    let (zeta1, zeta2) = if beta == 0.0 || kh2 == 0.0 {
        (0.0, 0.0)
    } else if k1 == 0.0 {
        // limit k1 → 0 of the distortion coefficients
        (-beta, 0.0)
    } else {
        let c1 = beta * k1 * k1 * (k0k0 - 2.0 * k30 * k30 + beta * k1 * k30) / (kk * kh2);
        let c2 = k2 * k0k0 / kh2.powf(1.5) * (beta * k1 * kh2.sqrt()).atan2(k0k0 - k30 * k1 * beta);
        (c1 - k2 / k1 * c2, k2 / k1 * c1 + c2)
    };

    let phi11 = a * (k0k0 - k1 * k1 - 2.0 * k1 * k30 * zeta1 + kh2 * zeta1 * zeta1);
    let phi22 = a * (k0k0 - k2 * k2 - 2.0 * k2 * k30 * zeta2 + kh2 * zeta2 * zeta2);
    let phi12 = a * (-k1 * k2 - k1 * k30 * zeta2 - k2 * k30 * zeta1 + kh2 * zeta1 * zeta2);
    let b = e / (4.0 * PI * k0k0 * kk);
    let phi13 = b * (-k1 * k30 + kh2 * zeta1);
    let phi23 = b * (-k2 * k30 + kh2 * zeta2);
    let phi33 = e / (4.0 * PI * kk * kk) * kh2;
    real_matrix([[phi11, phi12, phi13], [phi12, phi22, phi23], [phi13, phi23, phi33]])
}

pub fn frobenius_norm(m: &Matrix3) -> f64 {
    m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `C C†`.
pub fn gram(c: &Matrix3) -> Matrix3 {
    let mut out = ZERO_MATRIX;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| c[i][k] * c[j][k].conj()).sum();
        }
    }
    out
}

/// Lower-triangular `C` with `C C† = Φ` for Hermitian positive semidefinite `Φ`.
///
/// Pivots within `1e-10·(1 + ‖Φ‖_F)` of zero are treated as zero.
pub fn factorize_spectrum(phi: &Matrix3) -> Result<Matrix3, TurbulenceError> {
    let norm = frobenius_norm(phi);
    if !norm.is_finite() {
        return Err(TurbulenceError::Numeric("non-finite spectral matrix".into()));
    }
    let tol = 1e-10 * (1.0 + norm);
    for i in 0..3 {
        for j in 0..3 {
            if (phi[i][j] - phi[j][i].conj()).norm() > tol {
                return Err(TurbulenceError::Numeric("spectral matrix is not Hermitian".into()));
            }
        }
    }
    let mut c = ZERO_MATRIX;
    for j in 0..3 {
        let d = phi[j][j].re - (0..j).map(|k| c[j][k].norm_sqr()).sum::<f64>();
        if d < -tol {
            return Err(TurbulenceError::Numeric(format!("spectral matrix is indefinite (pivot {d:e})")));
        }
        if d <= tol {
            continue;
        }
        let pivot = d.sqrt();
        c[j][j] = Complex64::new(pivot, 0.0);
        for i in j + 1..3 {
            let s: Complex64 = (0..j).map(|k| c[i][k] * c[j][k].conj()).sum();
            c[i][j] = (phi[i][j] - s) / pivot;
        }
    }
    let g = gram(&c);
    let mut err = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            err += (g[i][j] - phi[i][j]).norm_sqr();
        }
    }
    if err.sqrt() > tol {
        return Err(TurbulenceError::Numeric(format!(
            "factorization residual {:e} exceeds tolerance",
            err.sqrt()
        )));
    }
    Ok(c)
}

/// Factorizes after normalizing by the trace, so tiny spectral levels keep
/// their relative precision.
pub(crate) fn factorize_scaled(phi: &Matrix3) -> Result<Matrix3, TurbulenceError> {
    let trace = phi[0][0].re + phi[1][1].re + phi[2][2].re;
    if trace <= 0.0 {
        return Ok(ZERO_MATRIX);
    }
    let scaled = phi.map(|row| row.map(|z| z / trace));
    let c = factorize_spectrum(&scaled)?;
    let s = trace.sqrt();
    Ok(c.map(|row| row.map(|z| z * s)))
}
