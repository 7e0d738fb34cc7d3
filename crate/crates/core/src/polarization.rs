//! Transverse projectors and polarization frames.
//!
//! A frame at `k` is a pair `(e(k,1), e(k,2))` of unit vectors orthogonal to
//! `k` and to each other, with `e(k,1) × e(k,2) = k̂`. Two constructions are
//! provided; both are covariant under rotations about their axis `n`:
//!
//! ```text
//! e(Rk,1) = cos(wφ) R e(k,1) − sin(wφ) R e(k,2)
//! e(Rk,2) = sin(wφ) R e(k,1) + cos(wφ) R e(k,2)        R = R(n, φ)
//! ```
//!
//! with winding `w = 1` for [`Construction::Meridian`] and `w = 0` for
//! [`Construction::AxisCross`].

use crate::{Error, Result};
use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Directions closer than this (in `|k̂ × n|`) to the axis are rejected.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// `δ⊥(k) = I − k̂k̂ᵀ` in any dimension.
pub fn transverse_projector(k: &[f64]) -> Result<DMatrix<f64>> {
    let norm = k.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::domain("transverse projector needs a nonzero finite k"));
    }
    let d = k.len();
    let mut m = DMatrix::identity(d, d);
    for a in 0..d {
        for b in 0..d {
            m[(a, b)] -= (k[a] / norm) * (k[b] / norm);
        }
    }
    Ok(m)
}

/// Axis–angle rotation `R(n, φ)` (Rodrigues form).
pub fn rotation_matrix(n: &Vector3<f64>, phi: f64) -> Result<Matrix3<f64>> {
    if (n.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("rotation axis must be a unit vector, |n| = {}", n.norm())));
    }
    let (s, c) = phi.sin_cos();
    let k = Matrix3::new(0.0, -n.z, n.y, n.z, 0.0, -n.x, -n.y, n.x, 0.0);
    Ok(Matrix3::identity() + k * s + k * k * (1.0 - c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    /// Seed frame on the `x–z` meridian, transported by `R(n_z, φ)` and mixed
    /// by the azimuth `φ`.
    Meridian,
    /// `e₁ = k̂ × n / |k̂ × n|`, `e₂ = k̂ × e₁`.
    AxisCross,
}

/// A polarization frame field with its declared covariance data `(n, w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationBasis {
    pub construction: Construction,
    pub axis: Vector3<f64>,
    pub winding: i32,
}

impl PolarizationBasis {
    pub fn meridian() -> Self {
        PolarizationBasis { construction: Construction::Meridian, axis: Vector3::z(), winding: 1 }
    }

    pub fn axis_cross(n: Vector3<f64>) -> Result<Self> {
        if (n.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::domain("axis-cross construction needs a unit axis"));
        }
        Ok(PolarizationBasis { construction: Construction::AxisCross, axis: n, winding: 0 })
    }

    /// The frame `(e(k,1), e(k,2))`.
    pub fn vectors(&self, k: &Vector3<f64>) -> Result<[Vector3<f64>; 2]> {
        match self.construction {
            Construction::Meridian => basis_meridian(k),
            Construction::AxisCross => basis_axis_cross(k, &self.axis),
        }
    }
}

fn unit(k: &Vector3<f64>) -> Result<Vector3<f64>> {
    let n = k.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::domain("polarization frame needs a nonzero finite k"));
    }
    Ok(k / n)
}

/// Frame transported from the `x–z` meridian.
///
/// On the meridian point `k̂₀ = (sinϑ, 0, cosϑ)` the seed pair is the polar
/// and azimuthal unit vectors `((cosϑ, 0, −sinϑ), (0, 1, 0))`.
pub fn basis_meridian(k: &Vector3<f64>) -> Result<[Vector3<f64>; 2]> {
    let kh = unit(k)?;
    let rho = kh.x.hypot(kh.y);
    if rho < DEGENERACY_TOL {
        return Err(Error::DegenerateDirection(format!(
            "k = {:?} lies on the meridian axis",
            k.as_slice()
        )));
    }
    let mut phi = kh.y.atan2(kh.x);
    if phi < 0.0 {
        phi += TAU;
    }
    let seed1 = Vector3::new(kh.z, 0.0, -rho);
    let seed2 = Vector3::y();
    let r = rotation_matrix(&Vector3::z(), phi)?;
    let (s, c) = phi.sin_cos();
    let t1 = r * seed1;
    let t2 = r * seed2;
    Ok([t1 * c - t2 * s, t1 * s + t2 * c])
}

/// Frame built from cross products with a fixed axis `n`.
pub fn basis_axis_cross(k: &Vector3<f64>, n: &Vector3<f64>) -> Result<[Vector3<f64>; 2]> {
    let kh = unit(k)?;
    let cross = kh.cross(n);
    let s = cross.norm();
    if s < DEGENERACY_TOL {
        return Err(Error::DegenerateDirection(format!(
            "k = {:?} is parallel to the axis {:?}",
            k.as_slice(),
            n.as_slice()
        )));
    }
    let e1 = cross / s;
    let e2 = kh.cross(&e1);
    Ok([e1, e2])
}

/// Largest entrywise deviation between the two sides of the covariance law
/// for `R = R(n, φ)` at `k`, using the basis' declared `(n, w)`.
pub fn covariance_residual(basis: &PolarizationBasis, k: &Vector3<f64>, phi: f64) -> Result<f64> {
    let r = rotation_matrix(&basis.axis, phi)?;
    let [e1, e2] = basis.vectors(k)?;
    let [f1, f2] = basis.vectors(&(r * k))?;
    let (s, c) = (phi * basis.winding as f64).sin_cos();
    let (re1, re2) = (r * e1, r * e2);
    let lhs1 = re1 * c - re2 * s;
    let lhs2 = re1 * s + re2 * c;
    Ok((f1 - lhs1).amax().max((f2 - lhs2).amax()))
}

/// Frame-change angle between `R e(k,·)` and `e(Rk,·)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameAngle {
    /// `arccos(R e(k,1) · e(Rk,1))`, in `[0, π]`.
    pub theta: f64,
    /// `+1` or `−1`: the sign of `R e(k,1) · e(Rk,2)`. The block rotation
    /// holds with the signed angle `orientation · theta`.
    pub orientation: f64,
    /// Largest entrywise residual of the block rotation with the signed angle.
    pub residual: f64,
}

impl FrameAngle {
    pub fn signed(&self) -> f64 {
        self.orientation * self.theta
    }
}

/// The angle `θ(R, k)` relating the rotated frame at `k` to the frame at `Rk`.
pub fn theta_angle(r: &Matrix3<f64>, k: &Vector3<f64>, basis: &PolarizationBasis) -> Result<FrameAngle> {
    let [e1, e2] = basis.vectors(k)?;
    let [f1, f2] = basis.vectors(&(r * k))?;
    let (re1, re2) = (r * e1, r * e2);
    let cos = re1.dot(&f1);
    let sin = re1.dot(&f2);
    // Same value as arccos(cos) but without its loss of accuracy near 0 and π.
    let theta = sin.abs().atan2(cos);
    let orientation = if sin < 0.0 { -1.0 } else { 1.0 };
    let (s, c) = (orientation * theta).sin_cos();
    let g1 = re1 * c - re2 * s;
    let g2 = re1 * s + re2 * c;
    let residual = (f1 - g1).amax().max((f2 - g2).amax());
    Ok(FrameAngle { theta, orientation, residual })
}

/// Residuals of the frame axioms at `k`: transversality, orthonormality,
/// completeness `Σ e eᵀ = δ⊥` and right-handedness, as a single max.
pub fn frame_residual(frame: &[Vector3<f64>; 2], k: &Vector3<f64>) -> Result<f64> {
    let kh = unit(k)?;
    let [e1, e2] = frame;
    let mut worst = 0.0f64;
    worst = worst.max(kh.dot(e1).abs()).max(kh.dot(e2).abs());
    worst = worst.max((e1.dot(e1) - 1.0).abs()).max((e2.dot(e2) - 1.0).abs()).max(e1.dot(e2).abs());
    let proj = transverse_projector(k.as_slice())?;
    let sum = e1 * e1.transpose() + e2 * e2.transpose();
    for a in 0..3 {
        for b in 0..3 {
            worst = worst.max((sum[(a, b)] - proj[(a, b)]).abs());
        }
    }
    worst = worst.max((e1.cross(e2) - kh).amax());
    Ok(worst)
}
