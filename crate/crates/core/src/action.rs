//! Discretized double stochastic integrals along a Brownian path.
//!
//! With left-endpoint (Itô) evaluation,
//!
//! ```text
//! q₁(K^{I₁}, K^{I₂}) = Σ_{i∈I₁} Σ_{j∈I₂} Δb(i)ᵀ W(s_i − s_j, b(s_i) − b(s_j)) Δb(j)
//! ```
//!
//! The sum is split as `lower(I₁,I₂) + lower(I₂,I₁) + diagonal`, where
//! `lower(I, J)` runs over `i ∈ I, j ∈ J, j < i`. Each piece is computed in a
//! fixed order, so swapping the intervals gives the same bits.
//!
//! For a mode-sum kernel `lower` is evaluated in `O(n)` per mode by carrying
//! the decayed sum `S_i = Σ_{j<i} Δb(j) e^{−ik·b(s_j)} e^{−(s_i−s_j)ω}`;
//! tabulated kernels use the direct double loop.

use crate::field_model::{ModeFunction, ModeSet, PairKernel, ScalarKernel};
use crate::paths::{BrownianPath, PathGrid};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// How the `i = j` terms of a same-interval double sum are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DiagonalRule {
    /// `Δb(i)ᵀ W(0,0) Δb(i)`.
    RealizedIncrements,
    /// `Δs · tr W(0,0)`, the quadratic-variation limit of the above.
    #[default]
    DeterministicQv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionConfig {
    pub e: f64,
    pub diagonal_rule: DiagonalRule,
}

/// Steps `start..end` of a grid, i.e. the time interval `[s_start, s_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    /// `[a, b]` with both ends on the grid.
    pub fn from_times(grid: &PathGrid, a: f64, b: f64) -> Result<Self> {
        let (start, end) = (grid.index_of(a)?, grid.index_of(b)?);
        if start > end {
            return Err(Error::domain(format!("interval [{a}, {b}] is reversed")));
        }
        Ok(Interval { start, end })
    }

    pub fn full(grid: &PathGrid) -> Self {
        Interval { start: 0, end: grid.n_steps() }
    }

    #[inline]
    fn contains(&self, i: usize) -> bool {
        self.start <= i && i < self.end
    }

    fn check(&self, grid: &PathGrid) -> Result<()> {
        if self.end > grid.n_steps() || self.start > self.end {
            return Err(Error::domain(format!(
                "interval of steps {}..{} does not fit a {}-step grid",
                self.start,
                self.end,
                grid.n_steps()
            )));
        }
        Ok(())
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// `Σ_{i∈outer} Σ_{j∈inner, j<i}` of the pair term, by direct double loop.
fn lower_direct(path: &BrownianPath, pos: &[f64], outer: Interval, inner: Interval, kernel: &PairKernel) -> Result<f64> {
    let d = path.d();
    let grid = path.grid();
    let mut x = vec![0.0; d];
    let mut acc = 0.0;
    for i in outer.start..outer.end {
        let ui = path.increment(i);
        let hi = i.min(inner.end);
        let mut row = 0.0;
        for j in inner.start..hi {
            for mu in 0..d {
                x[mu] = pos[i * d + mu] - pos[j * d + mu];
            }
            row += kernel.contract(grid.time(i) - grid.time(j), &x, ui, path.increment(j))?;
        }
        acc += row;
    }
    Ok(acc)
}

/// Same sum as [`lower_direct`] for a mode-sum kernel, by recursion.
fn lower_modes(path: &BrownianPath, pos: &[f64], outer: Interval, inner: Interval, modes: &ModeSet) -> f64 {
    let d = path.d();
    let dt = path.grid().dt();
    let lo = inner.start.min(outer.start);
    let hi = outer.end;
    let mut acc = 0.0;
    let mut s = vec![Complex64::new(0.0, 0.0); d];
    for m in modes.modes() {
        let decay = (-dt * m.omega).exp();
        let coef = 0.5 * m.kernel_weight();
        let khat: Vec<f64> = m.k.iter().map(|x| x / m.omega).collect();
        s.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        let mut part = 0.0;
        for i in lo..hi {
            let b = &pos[i * d..(i + 1) * d];
            let (sin, cos) = dot(&m.k, b).sin_cos();
            let u = path.increment(i);
            if outer.contains(i) {
                // Re[e^{ik·b_i} (u·S − (k̂·u)(k̂·S))]
                let mut us = Complex64::new(0.0, 0.0);
                let mut ks = Complex64::new(0.0, 0.0);
                for mu in 0..d {
                    us += s[mu] * u[mu];
                    ks += s[mu] * khat[mu];
                }
                let v = us - ks * dot(&khat, u);
                part += cos * v.re - sin * v.im;
            }
            if inner.contains(i) {
                for mu in 0..d {
                    s[mu] += Complex64::new(cos * u[mu], -sin * u[mu]);
                }
            }
            for z in s.iter_mut() {
                *z *= decay;
            }
        }
        acc += coef * part;
    }
    acc
}

fn lower(path: &BrownianPath, pos: &[f64], outer: Interval, inner: Interval, kernel: &PairKernel) -> Result<f64> {
    if outer.start >= outer.end || inner.start >= inner.end || inner.start >= outer.end {
        return Ok(0.0);
    }
    match kernel {
        PairKernel::ModeSum(ms) => Ok(lower_modes(path, pos, outer, inner, ms)),
        PairKernel::RadialTable(_) => lower_direct(path, pos, outer, inner, kernel),
    }
}

fn diagonal(path: &BrownianPath, common: Interval, kernel: &PairKernel, rule: DiagonalRule) -> Result<f64> {
    if common.start >= common.end {
        return Ok(0.0);
    }
    let d = path.d();
    let w0 = kernel.eval(0.0, &vec![0.0; d])?;
    match rule {
        DiagonalRule::DeterministicQv => Ok((common.end - common.start) as f64 * path.grid().dt() * w0.trace()),
        DiagonalRule::RealizedIncrements => {
            let mut acc = 0.0;
            for i in common.start..common.end {
                let u = path.increment(i);
                let mut q = 0.0;
                for a in 0..d {
                    for b in 0..d {
                        q += u[a] * w0[(a, b)] * u[b];
                    }
                }
                acc += q;
            }
            Ok(acc)
        }
    }
}

fn check_kernel(path: &BrownianPath, kernel: &PairKernel) -> Result<()> {
    if kernel.d() != path.d() {
        return Err(Error::domain(format!("path is {}-dimensional, kernel {}-dimensional", path.d(), kernel.d())));
    }
    Ok(())
}

/// Discretized `q₁(K^{I₁}, K^{I₂})`. Overlapping steps contribute diagonal
/// terms according to `rule`.
pub fn q1_double(path: &BrownianPath, i1: Interval, i2: Interval, kernel: &PairKernel, rule: DiagonalRule) -> Result<f64> {
    check_kernel(path, kernel)?;
    i1.check(&path.grid())?;
    i2.check(&path.grid())?;
    let pos = path.positions();
    q1_with_positions(path, &pos, i1, i2, kernel, rule)
}

pub(crate) fn q1_with_positions(
    path: &BrownianPath,
    pos: &[f64],
    i1: Interval,
    i2: Interval,
    kernel: &PairKernel,
    rule: DiagonalRule,
) -> Result<f64> {
    let common = Interval { start: i1.start.max(i2.start), end: i1.end.min(i2.end) };
    let a = lower(path, pos, i1, i2, kernel)?;
    let b = lower(path, pos, i2, i1, kernel)?;
    Ok((a + b) + diagonal(path, common, kernel, rule)?)
}

/// `(e²/2) q₁(K^{[0,T]}, K^{[0,T]})`; `exp(−full_action)` is the path weight.
pub fn full_action(path: &BrownianPath, horizon: f64, config: &ActionConfig, kernel: &PairKernel) -> Result<f64> {
    let i = Interval::from_times(&path.grid(), 0.0, horizon)?;
    let q = q1_double(path, i, i, kernel, config.diagonal_rule)?;
    Ok(config.e * config.e / 2.0 * q)
}

/// Cross covariance `D(t) = q₁(K^{[0,t]}, K^{[t,2t]})`.
pub fn cross_d(path: &BrownianPath, t: f64, kernel: &PairKernel) -> Result<f64> {
    let g = path.grid();
    let first = Interval::from_times(&g, 0.0, t)?;
    let second = Interval::from_times(&g, t, 2.0 * t)?;
    q1_double(path, first, second, kernel, DiagonalRule::RealizedIncrements)
}

/// Coupling of the path field over `interval` to a test function inserted
/// at time `t`:
///
/// ```text
/// ½ Σ_{i∈I} Σ_m w_m Δb(i)ᵀ δ⊥(k_m) f̂(k_m) (φ̂/√ω) e^{ik·(b(s_i) − b(t))} e^{−|s_i − t|ω}
/// ```
pub fn weyl_coupling_on(path: &BrownianPath, f: &ModeFunction, interval: Interval, t: f64, kernel: &PairKernel) -> Result<Complex64> {
    let modes = kernel
        .modes()
        .ok_or_else(|| Error::domain("test functions are only representable on a mode-sum kernel"))?;
    check_kernel(path, kernel)?;
    if f.d() != modes.d() || f.n_modes() != modes.len() {
        return Err(Error::domain("test function is not sampled on the kernel's mode set"));
    }
    let grid = path.grid();
    interval.check(&grid)?;
    let it = grid.index_of(t)?;
    let pos = path.positions();
    Ok(weyl_with_positions(path, &pos, f, interval, it, modes))
}

pub(crate) fn weyl_with_positions(
    path: &BrownianPath,
    pos: &[f64],
    f: &ModeFunction,
    interval: Interval,
    it: usize,
    modes: &ModeSet,
) -> Complex64 {
    let d = path.d();
    let grid = path.grid();
    let t = grid.time(it);
    let bt = &pos[it * d..(it + 1) * d];
    // Per mode: c_m (δ⊥ f̂)(k_m), then summed over steps pair by pair.
    let proj: Vec<Vec<Complex64>> = modes
        .modes()
        .iter()
        .enumerate()
        .map(|(m, mode)| {
            let fm = f.at(m);
            let mut kf = Complex64::new(0.0, 0.0);
            for a in 0..d {
                kf += fm[a] * (mode.k[a] / mode.omega);
            }
            (0..d).map(|a| fm[a] - kf * (mode.k[a] / mode.omega)).collect()
        })
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut x = vec![0.0; d];
    for i in interval.start..interval.end {
        let u = path.increment(i);
        for mu in 0..d {
            x[mu] = pos[i * d + mu] - bt[mu];
        }
        let decay_t = (grid.time(i) - t).abs();
        let mut step = Complex64::new(0.0, 0.0);
        for p in 0..modes.n_pairs() {
            let mut pair = Complex64::new(0.0, 0.0);
            for m in [2 * p, 2 * p + 1] {
                let mode = &modes.modes()[m];
                let coef = 0.5 * mode.weight * mode.phi / mode.omega.sqrt() * (-decay_t * mode.omega).exp();
                let (s, c) = dot(&mode.k, &x).sin_cos();
                let mut uf = Complex64::new(0.0, 0.0);
                for a in 0..d {
                    uf += proj[m][a] * u[a];
                }
                pair += uf * Complex64::new(c, s) * coef;
            }
            step += pair;
        }
        acc += step;
    }
    acc
}

/// Discretized `q₁(K^{[0,2t]}, f^t)` over the whole path.
pub fn weyl_coupling(path: &BrownianPath, f: &ModeFunction, t: f64, kernel: &PairKernel) -> Result<Complex64> {
    let interval = Interval::from_times(&path.grid(), 0.0, 2.0 * t)?;
    weyl_coupling_on(path, f, interval, t, kernel)
}

/// `‖Σ_i φ̃(· − b(s_i)) Δb_μ(i)‖² = Σ_{ij} Δb_μ(i) Δb_μ(j) V(b(s_i) − b(s_j))`
/// over `[0, t]`, with realized diagonal.
pub fn burkholder_norm(path: &BrownianPath, t: f64, mu: usize, kernel: &ScalarKernel) -> Result<f64> {
    let d = path.d();
    if mu >= d {
        return Err(Error::domain(format!("component {mu} out of range for d={d}")));
    }
    let n = path.grid().index_of(t)?;
    let pos = path.positions();
    let zero = vec![0.0; d];
    let v0 = kernel.eval(&zero)?;
    let mut x = vec![0.0; d];
    let mut off = 0.0;
    let mut diag = 0.0;
    for i in 0..n {
        let ui = path.increment(i)[mu];
        diag += ui * ui * v0;
        let mut row = 0.0;
        for j in 0..i {
            for a in 0..d {
                x[a] = pos[i * d + a] - pos[j * d + a];
            }
            row += path.increment(j)[mu] * kernel.eval(&x)?;
        }
        off += ui * row;
    }
    Ok(2.0 * off + diag)
}
