//! Special functions used by the kernel reductions and the position-grid
//! transform.

use std::f64::consts::PI;

const SERIES_SWITCH: f64 = 0.5;

/// Power series of `j_n(z) / z^n` around zero.
fn bessel_series_scaled(n: u32, z: f64) -> f64 {
    let mut dfact = 1.0; // (2n+1)!!
    for k in 1..=n {
        dfact *= (2 * k + 1) as f64;
    }
    let x = -0.5 * z * z;
    let mut term = 1.0 / dfact;
    let mut sum = term;
    for k in 1..30u32 {
        term *= x / (k as f64 * (2 * (n + k) + 1) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Spherical Bessel function `j₀(z) = sin z / z`.
pub fn sph_j0(z: f64) -> f64 {
    if z.abs() < SERIES_SWITCH {
        bessel_series_scaled(0, z)
    } else {
        z.sin() / z
    }
}

/// `j₁(z)/z`, finite at the origin (limit 1/3).
pub fn sph_j1_over_z(z: f64) -> f64 {
    if z.abs() < SERIES_SWITCH {
        bessel_series_scaled(1, z)
    } else {
        (z.sin() / z - z.cos()) / (z * z)
    }
}

/// Spherical Bessel function `j₂(z)`.
pub fn sph_j2(z: f64) -> f64 {
    if z.abs() < SERIES_SWITCH {
        z * z * bessel_series_scaled(2, z)
    } else {
        let (s, c) = z.sin_cos();
        (3.0 / (z * z) - 1.0) * s / z - 3.0 * c / (z * z)
    }
}

/// Surface area of the unit sphere `S^{d−1}` in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    // 2 π^{d/2} / Γ(d/2), with Γ at integers and half-integers done by hand.
    let half = d as f64 / 2.0;
    let gamma = if d % 2 == 0 {
        (1..d / 2).map(|k| k as f64).product::<f64>()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < half - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    };
    2.0 * PI.powf(half) / gamma
}

/// Normalized Hermite functions `h_0 … h_{n_max}` at `x`, with
/// `∫ h_n h_m dx = δ_nm` and `h_n` the eigenfunctions of `(x² − ∂²)/2`.
pub fn hermite_functions(n_max: usize, x: f64) -> Vec<f64> {
    let mut h = vec![0.0; n_max + 1];
    h[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if n_max >= 1 {
        h[1] = 2f64.sqrt() * x * h[0];
    }
    for n in 2..=n_max {
        let nf = n as f64;
        h[n] = (2.0 / nf).sqrt() * x * h[n - 1] - ((nf - 1.0) / nf).sqrt() * h[n - 2];
    }
    h
}

/// Binomial coefficient as a float; exact for the sizes used by Fock bases.
pub fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}
