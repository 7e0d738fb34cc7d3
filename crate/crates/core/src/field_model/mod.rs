//! Form factors, mode sets and the Euclidean pair kernel
//!
//! ```text
//! W_{αβ}(τ, x) = ½ ∫ δ⊥_{αβ}(k) |φ̂(k)|²/ω(k) e^{−|τ|ω(k)} cos(k·x) dk
//! ```
//!
//! evaluated either as a sum over a discrete [`ModeSet`] or through the
//! tabulated radial reduction of the continuum `d = 3` case.

mod form_factor;
mod modes;
mod table;

pub use form_factor::{FormFactor, FormFactorKind};
pub use modes::{Mode, ModeSet, Provenance};
pub use table::{IsotropicKernel, KernelTable, ScalarTable, TableGrid, TableHeader};

use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::sync::Arc;

/// Evaluator for `W_{αβ}(τ, x)`.
#[derive(Debug, Clone)]
pub enum PairKernel {
    ModeSum(Arc<ModeSet>),
    RadialTable(Arc<KernelTable>),
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

impl PairKernel {
    pub fn mode_sum(modes: ModeSet) -> Self {
        PairKernel::ModeSum(Arc::new(modes))
    }

    pub fn table(table: KernelTable) -> Self {
        PairKernel::RadialTable(Arc::new(table))
    }

    pub fn d(&self) -> usize {
        match self {
            PairKernel::ModeSum(m) => m.d(),
            PairKernel::RadialTable(t) => t.form_factor().d(),
        }
    }

    pub fn modes(&self) -> Option<&ModeSet> {
        match self {
            PairKernel::ModeSum(m) => Some(m),
            PairKernel::RadialTable(_) => None,
        }
    }

    /// The full matrix `W(τ, x)`.
    pub fn eval(&self, tau: f64, x: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.d();
        if x.len() != d {
            return Err(Error::domain(format!("x has {} components, kernel is {d}-dimensional", x.len())));
        }
        let mut w = DMatrix::zeros(d, d);
        match self {
            PairKernel::ModeSum(ms) => {
                for m in ms.modes() {
                    let c = 0.5 * m.kernel_weight() * (-tau.abs() * m.omega).exp() * dot(&m.k, x).cos();
                    for a in 0..d {
                        for b in 0..d {
                            let delta = if a == b { 1.0 } else { 0.0 };
                            w[(a, b)] += c * (delta - m.k[a] * m.k[b] / (m.omega * m.omega));
                        }
                    }
                }
            }
            PairKernel::RadialTable(t) => {
                let r = dot(x, x).sqrt();
                let (a_coef, b_coef) = t.ab(tau, r)?;
                for a in 0..d {
                    w[(a, a)] += a_coef;
                    if r > 0.0 {
                        for b in 0..d {
                            w[(a, b)] += b_coef * (x[a] / r) * (x[b] / r);
                        }
                    }
                }
            }
        }
        Ok(w)
    }

    /// `uᵀ W(τ, x) v`. Symmetric under `(u, v, x) ↦ (v, u, −x)` bit for bit.
    #[inline]
    pub fn contract(&self, tau: f64, x: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
        match self {
            PairKernel::ModeSum(ms) => {
                let uv = dot(u, v);
                let mut s = 0.0;
                for m in ms.modes() {
                    let ku = dot(&m.k, u) / m.omega;
                    let kv = dot(&m.k, v) / m.omega;
                    s += 0.5 * m.kernel_weight() * (-tau.abs() * m.omega).exp() * dot(&m.k, x).cos() * (uv - ku * kv);
                }
                Ok(s)
            }
            PairKernel::RadialTable(t) => {
                let r = dot(x, x).sqrt();
                let (a, b) = t.ab(tau, r)?;
                let mut s = a * dot(u, v);
                if r > 0.0 {
                    let xu = dot(x, u) / r;
                    let xv = dot(x, v) / r;
                    s += b * (xu * xv);
                }
                Ok(s)
            }
        }
    }

    /// `tr W(0, 0)`.
    pub fn trace_at_origin(&self) -> Result<f64> {
        let d = self.d();
        Ok(self.eval(0.0, &vec![0.0; d])?.trace())
    }
}

/// Expected value of the double action `q₁(K^{[0,t]}, K^{[0,t]})` under
/// Brownian motion: `t · ½ (d−1) ∫ |φ̂|²/ω dk`.
pub fn ito_isometry_mean(kernel: &PairKernel, t: f64) -> Result<f64> {
    let d = kernel.d() as f64;
    let norm = match kernel {
        PairKernel::ModeSum(ms) => ms.norm_sq_over_sqrt_omega(),
        PairKernel::RadialTable(tab) => tab.form_factor().norm_sq_over_sqrt_omega()?,
    };
    Ok(t * 0.5 * (d - 1.0) * norm)
}

/// Scalar kernel `V(x) = ∫ |φ̂|²/ω cos(k·x) dk`, used for the Burkholder
/// norm `‖∫ φ̃(· − b(s)) db_μ(s)‖²`.
#[derive(Debug, Clone)]
pub enum ScalarKernel {
    ModeSum(Arc<ModeSet>),
    Radial(Arc<ScalarTable>),
}

impl ScalarKernel {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            ScalarKernel::ModeSum(ms) => Ok(ms.modes().iter().map(|m| m.kernel_weight() * dot(&m.k, x).cos()).sum()),
            ScalarKernel::Radial(t) => t.eval(dot(x, x).sqrt()),
        }
    }
}

/// A `d`-component function sampled on the modes of a [`ModeSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFunction {
    d: usize,
    values: Vec<Complex64>,
}

impl ModeFunction {
    pub fn zeros(modes: &ModeSet) -> Self {
        ModeFunction { d: modes.d(), values: vec![Complex64::new(0.0, 0.0); modes.len() * modes.d()] }
    }

    /// Values `f̂(k_m)` given per mode, `d` components each.
    pub fn from_values(modes: &ModeSet, per_mode: Vec<Vec<Complex64>>) -> Result<Self> {
        if per_mode.len() != modes.len() || per_mode.iter().any(|v| v.len() != modes.d()) {
            return Err(Error::domain(format!(
                "test function needs {} modes × {} components",
                modes.len(),
                modes.d()
            )));
        }
        Ok(ModeFunction { d: modes.d(), values: per_mode.into_iter().flatten().collect() })
    }

    /// A real-space-real function: one real `d`-vector per pair, used for
    /// both `k` and `−k`.
    pub fn real_even(modes: &ModeSet, per_pair: &[Vec<f64>]) -> Result<Self> {
        if per_pair.len() != modes.n_pairs() {
            return Err(Error::domain(format!("need one vector per pair ({})", modes.n_pairs())));
        }
        let mut per_mode = Vec::with_capacity(modes.len());
        for v in per_pair {
            let c: Vec<Complex64> = v.iter().map(|x| Complex64::new(*x, 0.0)).collect();
            per_mode.push(c.clone());
            per_mode.push(c);
        }
        ModeFunction::from_values(modes, per_mode)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_modes(&self) -> usize {
        self.values.len() / self.d.max(1)
    }

    pub fn at(&self, m: usize) -> &[Complex64] {
        &self.values[m * self.d..(m + 1) * self.d]
    }

    /// True if `f̂(−k) = conj f̂(k)` on every pair, i.e. `f` is real in
    /// position space.
    pub fn is_real(&self, modes: &ModeSet) -> bool {
        (0..modes.n_pairs()).all(|p| self.at(2 * p).iter().zip(self.at(2 * p + 1)).all(|(a, b)| *a == b.conj()))
    }

    fn check(&self, modes: &ModeSet) -> Result<()> {
        if self.d != modes.d() || self.n_modes() != modes.len() {
            return Err(Error::domain(format!(
                "test function sampled on {} modes in d={}, mode set has {} modes in d={}",
                self.n_modes(),
                self.d,
                modes.len(),
                modes.d()
            )));
        }
        Ok(())
    }
}

/// `½ w Σ_{αβ} δ⊥_{αβ}(k) conj(f_α) g_β` for one mode.
fn q0_term(m: &Mode, f: &[Complex64], g: &[Complex64]) -> Complex64 {
    let mut fg = Complex64::new(0.0, 0.0);
    let mut kf = Complex64::new(0.0, 0.0);
    let mut kg = Complex64::new(0.0, 0.0);
    for a in 0..f.len() {
        fg += f[a].conj() * g[a];
        kf += f[a].conj() * (m.k[a] / m.omega);
        kg += g[a] * (m.k[a] / m.omega);
    }
    (fg - kf * kg) * (0.5 * m.weight)
}

/// `q₀(f, g) = ½ Σ_{αβ} ∫ δ⊥_{αβ}(k) conj(f̂_α(k)) ĝ_β(k) dk` on a mode set.
/// Sesquilinear; summed pair by pair so that real `f`, `g` give an exactly
/// real result.
pub fn q0_form(modes: &ModeSet, f: &ModeFunction, g: &ModeFunction) -> Result<Complex64> {
    f.check(modes)?;
    g.check(modes)?;
    let mut s = Complex64::new(0.0, 0.0);
    for p in 0..modes.n_pairs() {
        let (a, b) = (2 * p, 2 * p + 1);
        let ms = modes.modes();
        s += q0_term(&ms[a], f.at(a), g.at(a)) + q0_term(&ms[b], f.at(b), g.at(b));
    }
    Ok(s)
}

/// Second-layer covariance of time-shifted copies:
/// `q₂(ξ_s f, ξ_t g) = e^{−|s−t|} q₁(f, g)`.
#[inline]
pub fn q2_factor(s: f64, t: f64) -> f64 {
    (-(s - t).abs()).exp()
}
