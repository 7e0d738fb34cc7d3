//! Radial reduction of the continuum `d = 3` pair kernel and its tabulation.
//!
//! For an isotropic form factor
//! `W(τ, x) = A(τ, r) I + B(τ, r) x̂x̂ᵀ` with `r = |x|` and
//!
//! ```text
//! A(τ, r) = 2π ∫₀^Λ κ φ̂(κ)² e^{−|τ|κ} (j₀(κr) − j₁(κr)/(κr)) dκ
//! B(τ, r) = 2π ∫₀^Λ κ φ̂(κ)² e^{−|τ|κ} j₂(κr) dκ
//! ```
//!
//! which follows from `∫ dΩ (I − k̂k̂ᵀ) e^{iz k̂·n} = 4π[(j₀ − j₁/z) I + j₂ nnᵀ]`.

use super::FormFactor;
use crate::quadrature::{integrate_many, Tolerance};
use crate::special::{sph_j0, sph_j1_over_z, sph_j2};
use crate::{Error, Result};
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"FPKTAB\0\0";
const FORMAT_VERSION: u32 = 1;

/// Direct (quadrature) evaluation of the radial coefficients.
#[derive(Debug, Clone)]
pub struct IsotropicKernel {
    ff: FormFactor,
}

impl IsotropicKernel {
    pub fn new(ff: FormFactor) -> Result<Self> {
        if ff.d() != 3 {
            return Err(Error::domain("the radial reduction is only available in d = 3"));
        }
        Ok(IsotropicKernel { ff })
    }

    pub fn form_factor(&self) -> &FormFactor {
        &self.ff
    }

    /// `(A(τ, r), B(τ, r))` by adaptive quadrature.
    pub fn ab(&self, tau: f64, r: f64) -> Result<(f64, f64)> {
        let t = tau.abs();
        let bp = self.ff.breakpoints();
        let (mut a, mut b) = (0.0, 0.0);
        for w in bp.windows(2) {
            let res = integrate_many(
                |k| {
                    let phi = self.ff.value(k);
                    if phi == 0.0 {
                        return [0.0, 0.0];
                    }
                    let z = k * r;
                    let base = k * phi * phi * (-t * k).exp();
                    [base * (sph_j0(z) - sph_j1_over_z(z)), base * sph_j2(z)]
                },
                w[0],
                w[1],
                Tolerance::default(),
            )?;
            a += res[0].value;
            b += res[1].value;
        }
        Ok((2.0 * PI * a, 2.0 * PI * b))
    }

    /// Scalar kernel `V(r) = ∫ |φ̂|²/ω cos(k·x) d³k = 4π ∫ κ φ̂² j₀(κr) dκ`,
    /// the Burkholder-type kernel (no transverse projector, no time decay).
    pub fn scalar(&self, r: f64) -> Result<f64> {
        let bp = self.ff.breakpoints();
        let mut v = 0.0;
        for w in bp.windows(2) {
            let res = integrate_many(
                |k| {
                    let phi = self.ff.value(k);
                    [k * phi * phi * sph_j0(k * r)]
                },
                w[0],
                w[1],
                Tolerance::default(),
            )?;
            v += res[0].value;
        }
        Ok(4.0 * PI * v)
    }
}

/// Uniform grid in `τ ∈ [0, tau_max]` and `r ∈ [0, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableGrid {
    pub tau_max: f64,
    pub n_tau: usize,
    pub r_max: f64,
    pub n_r: usize,
}

impl TableGrid {
    /// Grid with steps no larger than `h_tau`, `h_r`.
    pub fn with_steps(tau_max: f64, r_max: f64, h_tau: f64, h_r: f64) -> Result<Self> {
        if !(tau_max >= 0.0 && r_max > 0.0 && h_tau > 0.0 && h_r > 0.0) {
            return Err(Error::domain("table extents must be nonnegative and steps positive"));
        }
        Ok(TableGrid {
            tau_max,
            n_tau: ((tau_max / h_tau).ceil() as usize).max(1),
            r_max,
            n_r: ((r_max / h_r).ceil() as usize).max(1),
        })
    }

    /// Default resolution for cutoff `Λ`: steps `0.0025/Λ` in `τ` and
    /// `0.004/Λ` in `r`, which keep bilinear interpolation error below
    /// `1e−6 · A(0,0)`.
    pub fn default_for(lambda: f64, tau_max: f64, r_max: f64) -> Result<Self> {
        TableGrid::with_steps(tau_max, r_max, 0.0025 / lambda, 0.004 / lambda)
    }

    fn len(&self) -> usize {
        (self.n_tau + 1) * (self.n_r + 1)
    }
}

/// Tabulated `A(τ, r)`, `B(τ, r)` with bilinear interpolation. Lookups
/// outside the grid are refused.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    ff: FormFactor,
    grid: TableGrid,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl KernelTable {
    pub fn build(ff: &FormFactor, grid: TableGrid) -> Result<Self> {
        let direct = IsotropicKernel::new(ff.clone())?;
        let mut a = Vec::with_capacity(grid.len());
        let mut b = Vec::with_capacity(grid.len());
        let ht = grid.tau_max / grid.n_tau as f64;
        let hr = grid.r_max / grid.n_r as f64;
        for i in 0..=grid.n_tau {
            for j in 0..=grid.n_r {
                let (x, y) = direct.ab(i as f64 * ht, j as f64 * hr)?;
                a.push(x);
                b.push(y);
            }
        }
        Ok(KernelTable { ff: ff.clone(), grid, a, b })
    }

    pub fn grid(&self) -> TableGrid {
        self.grid
    }

    pub fn form_factor(&self) -> &FormFactor {
        &self.ff
    }

    /// Interpolated `(A, B)` at `(|τ|, r)`.
    #[inline]
    pub fn ab(&self, tau: f64, r: f64) -> Result<(f64, f64)> {
        let g = &self.grid;
        let t = tau.abs();
        if t > g.tau_max * (1.0 + 1e-12) || r > g.r_max * (1.0 + 1e-12) || r < 0.0 || !r.is_finite() {
            return Err(Error::Extrapolation { tau, r, tau_max: g.tau_max, r_max: g.r_max });
        }
        let u = t / g.tau_max * g.n_tau as f64;
        let v = r / g.r_max * g.n_r as f64;
        let i = (u.floor() as usize).min(g.n_tau - 1);
        let j = (v.floor() as usize).min(g.n_r - 1);
        let (fu, fv) = (u - i as f64, v - j as f64);
        let w = g.n_r + 1;
        let idx = i * w + j;
        let lerp = |z: &[f64]| {
            let lo = z[idx] + fv * (z[idx + 1] - z[idx]);
            let hi = z[idx + w] + fv * (z[idx + w + 1] - z[idx + w]);
            lo + fu * (hi - lo)
        };
        Ok((lerp(&self.a), lerp(&self.b)))
    }

    /// Writes the table in the versioned little-endian binary layout:
    /// magic, version, d, Λ, form-factor fingerprint, grid, then `A` and
    /// `B` row-major in `τ`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(80 + 16 * self.a.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.ff.d() as u32).to_le_bytes());
        buf.extend_from_slice(&self.ff.lambda().to_le_bytes());
        buf.extend_from_slice(&self.ff.fingerprint().to_le_bytes());
        buf.extend_from_slice(&self.grid.tau_max.to_le_bytes());
        buf.extend_from_slice(&(self.grid.n_tau as u64).to_le_bytes());
        buf.extend_from_slice(&self.grid.r_max.to_le_bytes());
        buf.extend_from_slice(&(self.grid.n_r as u64).to_le_bytes());
        for x in self.a.iter().chain(&self.b) {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&buf)?;
        Ok(())
    }

    /// Reads a table written by [`KernelTable::save`], refusing it unless it
    /// was built for `ff`.
    pub fn load(path: &Path, ff: &FormFactor) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let bad = |reason: String| Error::TableMismatch { path: path.to_path_buf(), reason };
        let header = TableHeader::parse(&bytes).map_err(bad)?;
        if header.d != ff.d() as u32 {
            return Err(bad(format!("dimension {} but {} requested", header.d, ff.d())));
        }
        if header.lambda != ff.lambda() {
            return Err(bad(format!("cutoff {} but {} requested", header.lambda, ff.lambda())));
        }
        if header.fingerprint != ff.fingerprint() {
            return Err(bad("form factor differs from the requested one".into()));
        }
        let grid = header.grid;
        let n = grid.len();
        let body = &bytes[HEADER_LEN..];
        if body.len() != 16 * n {
            return Err(bad(format!("expected {} data bytes, found {}", 16 * n, body.len())));
        }
        let vals: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(KernelTable { ff: ff.clone(), grid, a: vals[..n].to_vec(), b: vals[n..].to_vec() })
    }

    /// Loads the cache at `path` if it matches `ff` and covers `grid`,
    /// otherwise builds a fresh table and writes it there.
    pub fn load_or_build(path: &Path, ff: &FormFactor, grid: TableGrid) -> Result<Self> {
        if path.exists() {
            if let Ok(t) = KernelTable::load(path, ff) {
                if t.grid == grid {
                    return Ok(t);
                }
            }
        }
        let t = KernelTable::build(ff, grid)?;
        t.save(path)?;
        Ok(t)
    }
}

const HEADER_LEN: usize = 8 + 4 + 4 + 8 + 8 + 8 + 8 + 8 + 8;

/// Header of a cache file, readable without knowing the form factor.
#[derive(Debug, Clone, PartialEq)]
pub struct TableHeader {
    pub version: u32,
    pub d: u32,
    pub lambda: f64,
    pub fingerprint: u64,
    pub grid: TableGrid,
}

impl TableHeader {
    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = vec![0u8; HEADER_LEN];
        std::fs::File::open(path)?.read_exact(&mut bytes)?;
        TableHeader::parse(&bytes).map_err(|reason| Error::TableMismatch { path: path.to_path_buf(), reason })
    }

    fn parse(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
            return Err("not a kernel table file".into());
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != FORMAT_VERSION {
            return Err(format!("format version {version}, expected {FORMAT_VERSION}"));
        }
        let grid = TableGrid {
            tau_max: f64_at(32),
            n_tau: u64_at(40) as usize,
            r_max: f64_at(48),
            n_r: u64_at(56) as usize,
        };
        if grid.n_tau == 0 || grid.n_r == 0 {
            return Err("empty grid".into());
        }
        Ok(TableHeader { version, d: u32_at(12), lambda: f64_at(16), fingerprint: u64_at(24), grid })
    }
}

/// Scalar radial kernel `V(r)` on a uniform grid with linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTable {
    r_max: f64,
    values: Vec<f64>,
}

impl ScalarTable {
    pub fn build(ff: &FormFactor, r_max: f64, h_r: f64) -> Result<Self> {
        let direct = IsotropicKernel::new(ff.clone())?;
        let n = ((r_max / h_r).ceil() as usize).max(1);
        let values = (0..=n)
            .map(|j| direct.scalar(j as f64 * r_max / n as f64))
            .collect::<Result<Vec<_>>>()?;
        Ok(ScalarTable { r_max, values })
    }

    #[inline]
    pub fn eval(&self, r: f64) -> Result<f64> {
        if r > self.r_max * (1.0 + 1e-12) || !r.is_finite() {
            return Err(Error::Extrapolation { tau: 0.0, r, tau_max: 0.0, r_max: self.r_max });
        }
        let n = self.values.len() - 1;
        let u = r / self.r_max * n as f64;
        let j = (u.floor() as usize).min(n - 1);
        let f = u - j as f64;
        Ok(self.values[j] + f * (self.values[j + 1] - self.values[j]))
    }
}
