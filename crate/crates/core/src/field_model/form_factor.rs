use crate::quadrature::{integrate, Tolerance};
use crate::special::sphere_area;
use crate::{Error, Result};
use std::f64::consts::PI;

/// Radial profile of the coupling `φ̂(k)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FormFactorKind {
    /// `φ̂(k) = (2π)^{-d/2}` for `|k| < Λ`, zero beyond.
    SharpCutoff,
    /// Piecewise linear in `|k|` through `(knots[i], values[i])`, zero beyond
    /// the last knot. The first knot must be 0.
    Table { knots: Vec<f64>, values: Vec<f64> },
}

/// A real, rotation-invariant form factor in `d` dimensions with cutoff `Λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormFactor {
    kind: FormFactorKind,
    lambda: f64,
    d: usize,
}

impl FormFactor {
    pub fn sharp_cutoff(d: usize, lambda: f64) -> Result<Self> {
        check_dim(d)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("cutoff must be positive and finite, got {lambda}")));
        }
        if d == 2 {
            // ∫ |φ̂|²/ω² d²k diverges logarithmically at k = 0.
            return Err(Error::domain(
                "sharp cutoff in d=2 violates the infrared condition φ̂/ω ∈ L²; use a table vanishing at k=0",
            ));
        }
        Ok(FormFactor { kind: FormFactorKind::SharpCutoff, lambda, d })
    }

    pub fn table(d: usize, knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_dim(d)?;
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::domain("form factor table needs ≥2 knots and one value per knot"));
        }
        if knots[0] != 0.0 {
            return Err(Error::domain("form factor table must start at k = 0"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("form factor knots must increase strictly and values be finite"));
        }
        if d == 2 && values[0] != 0.0 {
            return Err(Error::domain(
                "d=2 table must vanish at k=0, otherwise φ̂/ω is not square integrable",
            ));
        }
        let lambda = *knots.last().unwrap();
        Ok(FormFactor { kind: FormFactorKind::Table { knots, values }, lambda, d })
    }

    pub fn kind(&self) -> &FormFactorKind {
        &self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `φ̂` at momentum magnitude `kn ≥ 0`.
    pub fn value(&self, kn: f64) -> f64 {
        if kn >= self.lambda {
            return 0.0;
        }
        match &self.kind {
            FormFactorKind::SharpCutoff => (2.0 * PI).powf(-(self.d as f64) / 2.0),
            FormFactorKind::Table { knots, values } => {
                let i = knots.partition_point(|&x| x <= kn).clamp(1, knots.len() - 1);
                let t = (kn - knots[i - 1]) / (knots[i] - knots[i - 1]);
                values[i - 1] + t * (values[i] - values[i - 1])
            }
        }
    }

    /// Radial breakpoints where `φ̂` is not smooth (quadrature splits here).
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            FormFactorKind::SharpCutoff => vec![0.0, self.lambda],
            FormFactorKind::Table { knots, .. } => knots.clone(),
        }
    }

    /// `∫ |φ̂(k)|² ω(k)^p dᵈk`.
    pub fn moment(&self, p: i32) -> Result<f64> {
        let area = sphere_area(self.d);
        let power = p + self.d as i32 - 1;
        match &self.kind {
            FormFactorKind::SharpCutoff => {
                if power <= -1 {
                    return Ok(f64::INFINITY);
                }
                let amp2 = (2.0 * PI).powf(-(self.d as f64));
                Ok(area * amp2 * self.lambda.powi(power + 1) / (power + 1) as f64)
            }
            FormFactorKind::Table { .. } => {
                let bp = self.breakpoints();
                let mut total = 0.0;
                for w in bp.windows(2) {
                    let r = integrate(
                        |k| {
                            let v = self.value(k);
                            if v == 0.0 { 0.0 } else { v * v * k.powi(power) }
                        },
                        w[0],
                        w[1],
                        Tolerance::default(),
                    )?;
                    total += r.value;
                }
                Ok(area * total)
            }
        }
    }

    /// `‖φ̂/√ω‖² = ∫ |φ̂|²/ω dᵈk`.
    pub fn norm_sq_over_sqrt_omega(&self) -> Result<f64> {
        self.moment(-1)
    }

    /// Stable 64-bit fingerprint of the form factor, stored in table caches.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        h.write_u64(self.d as u64);
        h.write_u64(self.lambda.to_bits());
        match &self.kind {
            FormFactorKind::SharpCutoff => h.write_u64(1),
            FormFactorKind::Table { knots, values } => {
                h.write_u64(2);
                for (k, v) in knots.iter().zip(values) {
                    h.write_u64(k.to_bits());
                    h.write_u64(v.to_bits());
                }
            }
        }
        h.finish()
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::domain(format!("spatial dimension must be ≥ 2, got {d}")));
    }
    Ok(())
}

/// FNV-1a, fixed across platforms and releases (unlike `DefaultHasher`).
struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf29ce484222325)
    }
    fn write_u64(&mut self, x: u64) {
        for b in x.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }
    fn finish(&self) -> u64 {
        self.0
    }
}
