//! Special functions needed by the direction marginal and the shear spectrum.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real arguments (reflection below 1/2).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// Exponentially scaled modified Bessel function of the first kind:
/// `e^{-x} I_ν(x)` for `ν ∈ {0, 1}` and `x ≥ 0`.
fn bessel_i_scaled(order: u32, x: f64) -> f64 {
    debug_assert!(order <= 1);
    let x = x.abs();
    if x <= 20.0 {
        // power series sum_m (x/2)^{2m+ν} / (m! (m+ν)!)
        let q = 0.25 * x * x;
        let mut term = if order == 0 { 1.0 } else { 0.5 * x };
        let mut sum = term;
        let nu = order as f64;
        let mut m = 0.0;
        loop {
            m += 1.0;
            term *= q / (m * (m + nu));
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        // Hankel asymptotic expansion
        let mu = 4.0 * (order * order) as f64;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            let kf = k as f64;
            let next = -term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
            if next.abs() > term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum / (2.0 * PI * x).sqrt()
    }
}

/// `e^{-x} I₀(x)`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    bessel_i_scaled(0, x)
}

/// `e^{-x} I₁(x)`.
pub fn bessel_i1_scaled(x: f64) -> f64 {
    bessel_i_scaled(1, x)
}

/// `ln I₀(κ)`, stable for large κ.
pub fn ln_bessel_i0(kappa: f64) -> f64 {
    kappa.abs() + bessel_i0_scaled(kappa).ln()
}

/// Mean resultant length of a von Mises law, `A(κ) = I₁(κ)/I₀(κ)`.
pub fn bessel_ratio(kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    bessel_i1_scaled(kappa) / bessel_i0_scaled(kappa)
}

/// Solves `A(κ) = r` for κ by safeguarded Newton iteration, capped at `kappa_max`.
pub fn inverse_bessel_ratio(r: f64, kappa_max: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r >= bessel_ratio(kappa_max) {
        return kappa_max;
    }
    let (mut lo, mut hi) = (0.0_f64, kappa_max);
    // Best-Fisher style starting value
    let mut k = if r < 0.53 {
        2.0 * r + r.powi(3) + 5.0 * r.powi(5) / 6.0
    } else if r < 0.85 {
        -0.4 + 1.39 * r + 0.43 / (1.0 - r)
    } else {
        1.0 / (r.powi(3) - 4.0 * r.powi(2) + 3.0 * r)
    };
    k = k.clamp(1e-12, kappa_max);
    for _ in 0..200 {
        let a = bessel_ratio(k);
        let f = a - r;
        if f > 0.0 {
            hi = k;
        } else {
            lo = k;
        }
        let slope = 1.0 - a / k - a * a;
        let mut next = k - f / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - k).abs() <= 1e-14 * k.max(1e-300) {
            return next;
        }
        k = next;
    }
    k
}

fn hypergeometric_series(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..2000 {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Gauss hypergeometric function `₂F₁(a, b; c; z)` for `z ≤ 0`.
///
/// Uses the Pfaff transformation onto `w = z/(z-1) ∈ [0, 1)`, and the `1 - w`
/// connection formula when `w > 1/2`. Requires `c - a - (c - b)` to be
/// non-integer in the second regime.
pub fn hypergeometric_2f1_negative(a: f64, b: f64, c: f64, z: f64) -> f64 {
    assert!(z <= 0.0, "argument must be non-positive");
    let w = z / (z - 1.0);
    let prefactor = (1.0 - z).powf(-a);
    let bp = c - b;
    if w <= 0.5 {
        return prefactor * hypergeometric_series(a, bp, c, w);
    }
    let s = c - a - bp;
    let one_minus_w = 1.0 - w;
    let a1 = gamma(c) * gamma(s) / (gamma(c - a) * gamma(c - bp));
    let a2 = gamma(c) * gamma(-s) / (gamma(a) * gamma(bp));
    let f1 = hypergeometric_series(a, bp, 1.0 - s, one_minus_w);
    let f2 = hypergeometric_series(c - a, c - bp, 1.0 + s, one_minus_w);
    prefactor * (a1 * f1 + one_minus_w.powf(s) * a2 * f2)
}
