use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::CopulaError;
use crate::scalar::wrap_angle;
use crate::special::{bessel_i0_scaled, inverse_bessel_ratio};

/// Upper bound on fitted concentrations.
pub const KAPPA_MAX: f64 = 500.0;
const TABLE_CELLS: usize = 4096;
const INVERSION_TOL: f64 = 1e-10;

// 8-point Gauss–Legendre nodes and weights on [-1, 1]
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VonMisesComponent {
    pub weight: f64,
    pub location: f64,
    pub concentration: f64,
}

impl VonMisesComponent {
    fn pdf(&self, theta: f64) -> f64 {
        let k = self.concentration;
        (k * ((theta - self.location).cos() - 1.0)).exp() / (TAU * bessel_i0_scaled(k))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MixtureRepr {
    components: Vec<VonMisesComponent>,
}

/// Finite mixture of von Mises laws on `[0, 2π)`.
///
/// The CDF has no closed form; it is tabulated on 4096 cells (Gauss–Legendre
/// per cell) and evaluated exactly inside a cell. Inversion bisects within the
/// bracketing cell to 1e-10 in probability.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MixtureRepr", into = "MixtureRepr")]
pub struct VonMisesMixture {
    components: Vec<VonMisesComponent>,
    cumulative: Vec<f64>,
    mass: f64,
}

impl PartialEq for VonMisesMixture {
    fn eq(&self, other: &Self) -> bool {
        self.components == other.components
    }
}

impl TryFrom<MixtureRepr> for VonMisesMixture {
    type Error = CopulaError;
    fn try_from(r: MixtureRepr) -> Result<Self, CopulaError> {
        Self::new(r.components)
    }
}

impl From<VonMisesMixture> for MixtureRepr {
    fn from(m: VonMisesMixture) -> Self {
        MixtureRepr { components: m.components }
    }
}

impl VonMisesMixture {
    pub fn new(components: Vec<VonMisesComponent>) -> Result<Self, CopulaError> {
        if components.is_empty() {
            return Err(CopulaError::Argument("mixture needs at least one component".into()));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if components.iter().any(|c| !(c.weight >= 0.0) || !(c.concentration >= 0.0) || !c.location.is_finite())
            || (total - 1.0).abs() > 1e-12
        {
            return Err(CopulaError::Argument(format!(
                "invalid mixture components (weights sum to {total})"
            )));
        }
        let components = components
            .into_iter()
            .map(|c| VonMisesComponent { location: wrap_angle(c.location), ..c })
            .collect();
        let mut m = Self { components, cumulative: Vec::new(), mass: 1.0 };
        m.tabulate();
        Ok(m)
    }

    /// Single von Mises law.
    pub fn single(location: f64, concentration: f64) -> Result<Self, CopulaError> {
        Self::new(vec![VonMisesComponent { weight: 1.0, location, concentration }])
    }

    pub fn components(&self) -> &[VonMisesComponent] {
        &self.components
    }

    fn tabulate(&mut self) {
        let h = TAU / TABLE_CELLS as f64;
        let mut cum = Vec::with_capacity(TABLE_CELLS + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for m in 0..TABLE_CELLS {
            acc += self.integrate(m as f64 * h, (m + 1) as f64 * h);
            cum.push(acc);
        }
        for c in cum.iter_mut() {
            *c /= acc;
        }
        self.cumulative = cum;
        self.mass = acc;
    }

    fn integrate(&self, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        GL8.iter().map(|&(x, w)| w * self.pdf_raw(mid + half * x)).sum::<f64>() * half
    }

    fn pdf_raw(&self, theta: f64) -> f64 {
        self.components.iter().map(|c| c.weight * c.pdf(theta)).sum()
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        self.pdf_raw(wrap_angle(theta))
    }

    pub fn ln_pdf(&self, theta: f64) -> f64 {
        self.pdf(theta).ln()
    }

    pub fn log_likelihood(&self, angles: &[f64]) -> f64 {
        angles.iter().map(|&t| self.ln_pdf(t)).sum()
    }

    /// Circular CDF with origin at 0: `F(θ) = P(Θ ≤ θ)` for `θ ∈ [0, 2π]`.
    pub fn cdf(&self, theta: f64) -> f64 {
        if theta <= 0.0 {
            return 0.0;
        }
        if theta >= TAU {
            return 1.0;
        }
        let h = TAU / TABLE_CELLS as f64;
        let m = ((theta / h) as usize).min(TABLE_CELLS - 1);
        (self.cumulative[m] + self.integrate(m as f64 * h, theta) / self.mass).clamp(0.0, 1.0)
    }

    /// Inverse CDF by bisection in the bracketing table cell.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return TAU;
        }
        let m = self.cumulative.partition_point(|&c| c < p).clamp(1, TABLE_CELLS) - 1;
        let h = TAU / TABLE_CELLS as f64;
        let (mut lo, mut hi) = (m as f64 * h, (m + 1) as f64 * h);
        let total = self.mass;
        let base = self.cumulative[m];
        let left = lo;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let f = base + self.integrate(left, mid) / total;
            if (f - p).abs() <= INVERSION_TOL {
                return mid;
            }
            if f < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Location of the highest density.
    pub fn mode(&self) -> f64 {
        let n = TABLE_CELLS;
        let h = TAU / n as f64;
        let best = (0..n)
            .map(|i| (i, self.pdf_raw(i as f64 * h)))
            .fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        // golden-section refinement on the neighbouring cells
        let (mut a, mut b) = ((best.0 as f64 - 1.0) * h, (best.0 as f64 + 1.0) * h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        for _ in 0..80 {
            if self.pdf(c) > self.pdf(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - g * (b - a);
            d = a + g * (b - a);
        }
        wrap_angle(0.5 * (a + b))
    }
}

/// How component locations are treated while fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode", content = "locations")]
pub enum Orientation {
    /// Locations, weights and concentrations are all estimated.
    #[default]
    Free,
    /// Locations fixed at the given angles (radians); weights and concentrations estimated.
    Prescribed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VonMisesFit {
    pub mixture: VonMisesMixture,
    /// Mean log-likelihood per sample after each EM iteration.
    pub log_likelihood_trace: Vec<f64>,
    pub iterations: usize,
}

impl VonMisesFit {
    pub fn log_likelihood(&self, n: usize) -> f64 {
        self.log_likelihood_trace.last().copied().unwrap_or(f64::NAN) * n as f64
    }
}

fn initial_locations(angles: &[f64], n_components: usize) -> Vec<f64> {
    const BINS: usize = 72;
    let mut hist = [0.0_f64; BINS];
    for &t in angles {
        let b = ((wrap_angle(t) / TAU * BINS as f64) as usize).min(BINS - 1);
        hist[b] += 1.0;
    }
    let kernel = [1.0, 2.0, 3.0, 2.0, 1.0];
    let smooth: Vec<f64> = (0..BINS)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(o, w)| w * hist[(i + BINS + o - 2) % BINS])
                .sum()
        })
        .collect();
    let mut peaks: Vec<(usize, f64)> = (0..BINS)
        .filter(|&i| {
            let l = smooth[(i + BINS - 1) % BINS];
            let r = smooth[(i + 1) % BINS];
            smooth[i] > l && smooth[i] >= r
        })
        .map(|i| (i, smooth[i]))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let centre = |i: usize| (i as f64 + 0.5) * TAU / BINS as f64;
    let mut locs: Vec<f64> = peaks.iter().take(n_components).map(|p| centre(p.0)).collect();
    let anchor = locs.first().copied().unwrap_or(0.0);
    let mut j = 1;
    while locs.len() < n_components {
        locs.push(wrap_angle(anchor + TAU * j as f64 / n_components as f64));
        j += 1;
    }
    locs
}

/// EM fit of a von Mises mixture.
///
/// Stops when the mean log-likelihood increases by less than 1e-9 or after 500
/// iterations. Concentrations are capped at [`KAPPA_MAX`].
pub fn fit_von_mises_mixture(
    angles: &[f64],
    n_components: usize,
    orientation: &Orientation,
) -> Result<VonMisesFit, CopulaError> {
    if angles.is_empty() {
        return Err(CopulaError::Argument("no direction samples".into()));
    }
    if n_components == 0 {
        return Err(CopulaError::Argument("at least one mixture component required".into()));
    }
    if angles.len() < 10 * n_components {
        return Err(CopulaError::Fit(format!(
            "{} samples are too few for {} components",
            angles.len(),
            n_components
        )));
    }
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(CopulaError::Argument("non-finite direction sample".into()));
    }
    let xs: Vec<f64> = angles.iter().map(|&a| wrap_angle(a)).collect();
    let (cos, sin): (Vec<f64>, Vec<f64>) = xs.iter().map(|t| (t.cos(), t.sin())).unzip();
    let fixed = match orientation {
        Orientation::Free => None,
        Orientation::Prescribed(locs) => {
            if locs.len() != n_components {
                return Err(CopulaError::Argument(format!(
                    "{} prescribed locations for {} components",
                    locs.len(),
                    n_components
                )));
            }
            Some(locs.iter().map(|&l| wrap_angle(l)).collect::<Vec<_>>())
        }
    };
    let locations = fixed.clone().unwrap_or_else(|| initial_locations(&xs, n_components));
    let mut comps: Vec<VonMisesComponent> = locations
        .into_iter()
        .map(|location| VonMisesComponent {
            weight: 1.0 / n_components as f64,
            location,
            concentration: 2.0,
        })
        .collect();

    let n = xs.len();
    let mut resp = vec![0.0; n * n_components];
    let mut trace = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    let mut iterations = 0;
    for it in 0..500 {
        iterations = it + 1;
        // E-step
        let mut ll = 0.0;
        for i in 0..n {
            let row = &mut resp[i * n_components..(i + 1) * n_components];
            let mut total = 0.0;
            for (r, c) in row.iter_mut().zip(&comps) {
                *r = c.weight * c.pdf(xs[i]);
                total += *r;
            }
            ll += total.ln();
            for r in row.iter_mut() {
                *r /= total;
            }
        }
        let mean_ll = ll / n as f64;
        if it > 0 {
            trace.push(mean_ll);
            if mean_ll - prev < 1e-9 {
                break;
            }
        }
        prev = mean_ll;
        // M-step
        for (j, c) in comps.iter_mut().enumerate() {
            let mut nj = 0.0;
            let mut sc = 0.0;
            let mut ss = 0.0;
            for i in 0..n {
                let r = resp[i * n_components + j];
                nj += r;
                sc += r * cos[i];
                ss += r * sin[i];
            }
            if nj < 1e-12 {
                c.weight = 0.0;
                continue;
            }
            c.weight = nj / n as f64;
            if fixed.is_none() {
                c.location = wrap_angle(ss.atan2(sc));
            }
            let rbar = (sc * c.location.cos() + ss * c.location.sin()) / nj;
            c.concentration = inverse_bessel_ratio(rbar.max(0.0), KAPPA_MAX);
        }
        let total: f64 = comps.iter().map(|c| c.weight).sum();
        for c in comps.iter_mut() {
            c.weight /= total;
        }
    }
    if trace.is_empty() {
        trace.push(prev);
    }
    Ok(VonMisesFit {
        mixture: VonMisesMixture::new(comps)?,
        log_likelihood_trace: trace,
        iterations,
    })
}
