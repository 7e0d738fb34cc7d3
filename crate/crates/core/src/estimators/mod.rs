//! Monte Carlo estimators built on the path functionals of [`crate::action`].
//!
//! Every estimator draws the streams of an [`Ensemble`], evaluates a vector of
//! per-path samples and reduces them by batch means. Ratios share paths
//! between numerator and denominator.

mod stats;

pub use stats::{ratio_of_sums, Ensemble, EstimateResult, DEFAULT_BATCHES, MIN_BATCHES};

use crate::action::{q1_with_positions, weyl_with_positions, ActionConfig, DiagonalRule, Interval};
use crate::field_model::{ModeFunction, ModeSet, PairKernel, ScalarKernel};
use crate::paths::BrownianPath;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;
use stats::{mean_estimate, ratio_estimate};

/// Coupling, kernel and discretization rule shared by the estimators.
#[derive(Debug, Clone)]
pub struct Model {
    pub kernel: PairKernel,
    pub e: f64,
    pub diagonal_rule: DiagonalRule,
}

impl Model {
    pub fn new(kernel: PairKernel, e: f64) -> Self {
        Model { kernel, e, diagonal_rule: DiagonalRule::default() }
    }

    pub fn action_config(&self) -> ActionConfig {
        ActionConfig { e: self.e, diagonal_rule: self.diagonal_rule }
    }

    fn describe(&self) -> serde_json::Value {
        let kernel = match &self.kernel {
            PairKernel::ModeSum(ms) => json!({
                "evaluator": "mode-sum",
                "n_modes": ms.len(),
                "provenance": ms.provenance(),
            }),
            PairKernel::RadialTable(t) => json!({
                "evaluator": "radial-table",
                "lambda": t.form_factor().lambda(),
                "tau_max": t.grid().tau_max,
                "r_max": t.grid().r_max,
                "n_tau": t.grid().n_tau,
                "n_r": t.grid().n_r,
            }),
        };
        json!({ "e": self.e, "diagonal_rule": self.diagonal_rule, "kernel": kernel })
    }

    fn check(&self, ens: &Ensemble, p: &[f64]) -> Result<()> {
        if self.kernel.d() != ens.d {
            return Err(Error::domain(format!("kernel is {}-dimensional, ensemble {}", self.kernel.d(), ens.d)));
        }
        if p.len() != ens.d {
            return Err(Error::domain(format!("momentum has {} components, expected {}", p.len(), ens.d)));
        }
        if !self.e.is_finite() {
            return Err(Error::domain("coupling must be finite"));
        }
        Ok(())
    }

    fn modes(&self) -> Result<&ModeSet> {
        self.kernel
            .modes()
            .ok_or_else(|| Error::domain("test-function insertions need a mode-sum kernel"))
    }
}

#[inline]
fn phase(p: &[f64], pos: &[f64], from: usize, to: usize) -> Complex64 {
    let d = p.len();
    let mut x = 0.0;
    for mu in 0..d {
        x += p[mu] * (pos[to * d + mu] - pos[from * d + mu]);
    }
    let (s, c) = x.sin_cos();
    Complex64::new(c, s)
}

fn metadata(name: &str, model: &Model, ens: &Ensemble, extra: serde_json::Value) -> serde_json::Value {
    json!({
        "estimator": name,
        "model": model.describe(),
        "ensemble": ens.describe(),
        "parameters": extra,
        "version": crate::VERSION,
    })
}

/// Per-path sample of `Z_t(P)`: `e^{iP·b(t)} exp(−(e²/2) q₁(K^{[0,t]}, K^{[0,t]}))`.
pub fn partition_sample(model: &Model, p: &[f64], t: f64, path: &BrownianPath) -> Result<Complex64> {
    let grid = path.grid();
    let n = grid.index_of(t)?;
    let pos = path.positions();
    let i = Interval { start: 0, end: n };
    let q = q1_with_positions(path, &pos, i, i, &model.kernel, model.diagonal_rule)?;
    let w = (-(model.e * model.e / 2.0) * q).exp();
    Ok(phase(p, &pos, 0, n) * w)
}

/// `Z_t(P) = (Ω, e^{−tH(P)} Ω)` by Monte Carlo.
pub fn partition(model: &Model, p: &[f64], t: f64, ens: &Ensemble) -> Result<EstimateResult> {
    model.check(ens, p)?;
    ens.grid.index_of(t)?;
    let sums = ens.batch_sums(1, |path| Ok(vec![partition_sample(model, p, t, path)?]))?;
    Ok(mean_estimate(&sums, 0, ens, metadata("partition", model, ens, json!({ "P": p, "t": t }))))
}

/// One rung of the horizon ladder.
#[derive(Debug, Clone, Serialize)]
pub struct LadderPoint {
    pub t: f64,
    pub z: EstimateResult,
}

/// Two-point energy estimate between consecutive ladder horizons.
#[derive(Debug, Clone, Serialize)]
pub struct TwoPoint {
    pub t1: f64,
    pub t2: f64,
    pub energy: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyEstimate {
    /// `−log(Z_{t_n}/Z_{t_{n−1}})/(t_n − t_{n−1})` for the two largest horizons.
    pub energy: EstimateResult,
    pub ladder: Vec<LadderPoint>,
    pub two_point: Vec<TwoPoint>,
}

/// Lowest energy `E(P, e²)` from the decay of `Z_t(P)` along `ladder`.
///
/// The estimate is biased at finite horizons by the excited-state admixture
/// of the vacuum; the consecutive two-point values show the plateau.
pub fn ground_energy(model: &Model, p: &[f64], ladder: &[f64], ens: &Ensemble) -> Result<EnergyEstimate> {
    model.check(ens, p)?;
    if ladder.len() < 2 || ladder.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("the horizon ladder needs ≥2 increasing entries"));
    }
    let idx: Vec<usize> = ladder.iter().map(|&t| ens.grid.index_of(t)).collect::<Result<_>>()?;
    let sums = ens.batch_sums(ladder.len(), |path| {
        let pos = path.positions();
        let mut out = Vec::with_capacity(idx.len());
        for &n in &idx {
            let i = Interval { start: 0, end: n };
            let q = q1_with_positions(path, &pos, i, i, &model.kernel, model.diagonal_rule)?;
            out.push(phase(p, &pos, 0, n) * (-(model.e * model.e / 2.0) * q).exp());
        }
        Ok(out)
    })?;
    let meta = |name: &str| metadata(name, model, ens, json!({ "P": p, "ladder": ladder }));
    let ladder_points: Vec<LadderPoint> = ladder
        .iter()
        .enumerate()
        .map(|(k, &t)| LadderPoint { t, z: mean_estimate(&sums, k, ens, meta("partition")) })
        .collect();
    let mut two_point = Vec::new();
    for k in 1..ladder.len() {
        let (e, err) = log_ratio(&sums, k - 1, k, ladder[k] - ladder[k - 1])?;
        two_point.push(TwoPoint { t1: ladder[k - 1], t2: ladder[k], energy: e, stderr: err });
    }
    let last = two_point.last().expect("ladder has two entries");
    let n: usize = sums.iter().map(|(_, c)| c).sum();
    let energy = EstimateResult {
        mean: Complex64::new(last.energy, 0.0),
        stderr: last.stderr,
        n_samples: n,
        n_batches: sums.len(),
        antithetic: ens.antithetic,
        metadata: meta("ground_energy"),
    };
    Ok(EnergyEstimate { energy, ladder: ladder_points, two_point })
}

fn log_ratio(sums: &[(Vec<Complex64>, usize)], a: usize, b: usize, dt: f64) -> Result<(f64, f64)> {
    let za: f64 = sums.iter().map(|(s, _)| s[a].re).sum();
    let zb: f64 = sums.iter().map(|(s, _)| s[b].re).sum();
    if !(za > 0.0 && zb > 0.0) {
        return Err(Error::Statistical(format!("nonpositive partition estimate ({za}, {zb}); sample more paths")));
    }
    let e = -(zb / za).ln() / dt;
    let mut batch = Vec::with_capacity(sums.len());
    for (s, _) in sums {
        if !(s[a].re > 0.0 && s[b].re > 0.0) {
            return Err(Error::Statistical("a batch has a nonpositive partition estimate; sample more paths".into()));
        }
        batch.push(-(s[b].re / s[a].re).ln() / dt);
    }
    let nb = batch.len() as f64;
    let ss: f64 = batch.iter().map(|x| (x - e) * (x - e)).sum();
    Ok((e, (ss / (nb * (nb - 1.0))).sqrt()))
}

/// Per-path `(numerator, denominator)` of the `e^{−βN}` ratio on `[0, 2t]`.
///
/// With `G = e(ξ₀K^{[0,t]} + ξ_β K^{[t,2t]})` the Gaussian factor is
/// `exp(−½ q₂(G,G)) = exp(−(e²/2) q₁(K^{[0,2t]},K^{[0,2t]})) · exp(e²(1−e^{−β}) D(t))`.
pub fn expn_sample(model: &Model, beta: f64, p: &[f64], t: f64, path: &BrownianPath) -> Result<[Complex64; 2]> {
    let grid = path.grid();
    let (n1, n2) = (grid.index_of(t)?, grid.index_of(2.0 * t)?);
    let pos = path.positions();
    let full = Interval { start: 0, end: n2 };
    let q = q1_with_positions(path, &pos, full, full, &model.kernel, model.diagonal_rule)?;
    let dcross = q1_with_positions(
        path,
        &pos,
        Interval { start: 0, end: n1 },
        Interval { start: n1, end: n2 },
        &model.kernel,
        model.diagonal_rule,
    )?;
    let e2 = model.e * model.e;
    let base = -(e2 / 2.0) * q;
    let ph = phase(p, &pos, 0, n2);
    Ok([ph * (base + e2 * (1.0 - (-beta).exp()) * dcross).exp(), ph * base.exp()])
}

/// `⟨e^{−βN}⟩` in the state `e^{−tH(P)}Ω`, normalized.
pub fn expectation_expn(model: &Model, beta: f64, p: &[f64], t: f64, ens: &Ensemble) -> Result<EstimateResult> {
    model.check(ens, p)?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::domain("β must be nonnegative"));
    }
    ens.grid.index_of(2.0 * t)?;
    let sums = ens.batch_sums(2, |path| Ok(expn_sample(model, beta, p, t, path)?.to_vec()))?;
    ratio_estimate(&sums, 0, 1, ens, metadata("expN", model, ens, json!({ "beta": beta, "P": p, "t": t })))
}

/// Per-path `(numerator, denominator)` of the Weyl-operator ratio.
pub fn weyl_sample(model: &Model, f: &ModeFunction, q0ff: f64, p: &[f64], t: f64, path: &BrownianPath) -> Result<[Complex64; 2]> {
    let grid = path.grid();
    let (nt, n2) = (grid.index_of(t)?, grid.index_of(2.0 * t)?);
    let pos = path.positions();
    let full = Interval { start: 0, end: n2 };
    let q = q1_with_positions(path, &pos, full, full, &model.kernel, model.diagonal_rule)?;
    let c = weyl_with_positions(path, &pos, f, full, nt, model.modes()?);
    let ph = phase(p, &pos, 0, n2) * (-(model.e * model.e / 2.0) * q).exp();
    Ok([ph * (-model.e * c - 0.5 * q0ff).exp(), ph])
}

/// `⟨e^{−iA(f)}⟩` in the state `e^{−tH(P)}Ω`, normalized. `f` must be real
/// in position space.
pub fn expectation_weyl(model: &Model, f: &ModeFunction, p: &[f64], t: f64, ens: &Ensemble) -> Result<EstimateResult> {
    model.check(ens, p)?;
    let modes = model.modes()?;
    if !f.is_real(modes) {
        return Err(Error::domain("Weyl test functions must satisfy f̂(−k) = conj f̂(k)"));
    }
    let q0ff = crate::field_model::q0_form(modes, f, f)?.re;
    ens.grid.index_of(2.0 * t)?;
    let sums = ens.batch_sums(2, |path| Ok(weyl_sample(model, f, q0ff, p, t, path)?.to_vec()))?;
    ratio_estimate(&sums, 0, 1, ens, metadata("weyl", model, ens, json!({ "P": p, "t": t, "q0_ff": q0ff })))
}

/// An inserted Weyl operator `e^{iθA(f)}`.
#[derive(Debug, Clone)]
pub struct WeylInsertion {
    pub f: ModeFunction,
    pub theta: f64,
}

/// Time schedule of an `m`-point Euclidean Green function
///
/// ```text
/// (Ω, e^{−(s₁−s₀)N} e^{−(t₁−t₀)H(P₀)} Φ₁ e^{−(s₂−s₁)N} e^{−(t₂−t₁)H(P₁)} Φ₂ ⋯ e^{−(t_m−t_{m−1})H(P_{m−1})} Ω)
/// ```
///
/// with `s₀ = t₀ = 0`, `insertions[j−1] = Φ_j` for `j = 1..m−1`.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub momenta: Vec<Vec<f64>>,
    pub insertions: Vec<Option<WeylInsertion>>,
}

impl Schedule {
    pub fn m(&self) -> usize {
        self.momenta.len()
    }

    fn validate(&self, model: &Model, ens: &Ensemble) -> Result<Vec<usize>> {
        let m = self.m();
        if m == 0 || self.s.len() != m + 1 || self.t.len() != m + 1 || self.insertions.len() + 1 != m {
            return Err(Error::domain("schedule needs m momenta, m+1 s- and t-values and m−1 insertions"));
        }
        if self.s[0] != 0.0 || self.t[0] != 0.0 {
            return Err(Error::domain("schedules start at s₀ = t₀ = 0"));
        }
        if self.s.windows(2).any(|w| w[1] < w[0]) || self.t.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain("schedule times must be nondecreasing"));
        }
        for p in &self.momenta {
            if p.len() != ens.d {
                return Err(Error::domain("momentum dimension mismatch in schedule"));
            }
        }
        for ins in self.insertions.iter().flatten() {
            if !ins.f.is_real(model.modes()?) {
                return Err(Error::domain("inserted test functions must be real"));
            }
        }
        self.t.iter().map(|&t| ens.grid.index_of(t)).collect()
    }
}

/// `q₁(f^{t}, g^{t'})` for test functions placed at path points `b(t)`,
/// `b(t')`: `½ Σ_m w conj(f̂)ᵀ δ⊥ ĝ e^{ik·(b(t)−b(t'))} e^{−|t−t'|ω}`.
fn test_covariance(modes: &ModeSet, f: &ModeFunction, g: &ModeFunction, dx: &[f64], dt: f64) -> Complex64 {
    let d = modes.d();
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..modes.n_pairs() {
        let mut pair = Complex64::new(0.0, 0.0);
        for m in [2 * p, 2 * p + 1] {
            let mode = &modes.modes()[m];
            let (fm, gm) = (f.at(m), g.at(m));
            let mut fg = Complex64::new(0.0, 0.0);
            let mut kf = Complex64::new(0.0, 0.0);
            let mut kg = Complex64::new(0.0, 0.0);
            let mut kx = 0.0;
            for a in 0..d {
                fg += fm[a].conj() * gm[a];
                kf += fm[a].conj() * (mode.k[a] / mode.omega);
                kg += gm[a] * (mode.k[a] / mode.omega);
                kx += mode.k[a] * dx[a];
            }
            let (s, c) = kx.sin_cos();
            pair += (fg - kf * kg) * Complex64::new(c, s) * (0.5 * mode.weight * (-dt.abs() * mode.omega).exp());
        }
        acc += pair;
    }
    acc
}

/// Per-path weight of [`green_n_point`]: the momentum phase times
/// `exp(−½ q₂(G, G))`, `G = Σ_j e ξ_{s_j} K^{[t_{j−1},t_j]} − Σ_j θ_j ξ_{s_j} f_j^{t_j}`.
pub fn green_sample(model: &Model, schedule: &Schedule, idx: &[usize], path: &BrownianPath) -> Result<Complex64> {
    let m = schedule.m();
    let pos = path.positions();
    let d = path.d();
    let blocks: Vec<Interval> = (1..=m).map(|j| Interval { start: idx[j - 1], end: idx[j] }).collect();
    let s = &schedule.s;
    let mut quad = 0.0;
    for j in 0..m {
        quad += q1_with_positions(path, &pos, blocks[j], blocks[j], &model.kernel, model.diagonal_rule)?;
        for l in j + 1..m {
            let b = q1_with_positions(path, &pos, blocks[j], blocks[l], &model.kernel, model.diagonal_rule)?;
            quad += 2.0 * ((-(s[j + 1] - s[l + 1]).abs()).exp() * b);
        }
    }
    // Insertion j (1-based) lives at (s_j, t_j).
    let mut cross = Complex64::new(0.0, 0.0);
    let mut self_term = Complex64::new(0.0, 0.0);
    let inserted: Vec<(usize, &WeylInsertion)> =
        schedule.insertions.iter().enumerate().filter_map(|(k, x)| x.as_ref().map(|w| (k + 1, w))).collect();
    if !inserted.is_empty() {
        let modes = model.modes()?;
        for &(j, ins) in &inserted {
            for (bk, block) in blocks.iter().enumerate() {
                let c = weyl_with_positions(path, &pos, &ins.f, *block, idx[j], modes);
                cross += c * (ins.theta * (-(s[bk + 1] - s[j]).abs()).exp());
            }
            for &(l, other) in &inserted {
                let dx: Vec<f64> = (0..d).map(|a| pos[idx[j] * d + a] - pos[idx[l] * d + a]).collect();
                let dt = schedule.t[j] - schedule.t[l];
                let f = test_covariance(modes, &ins.f, &other.f, &dx, dt);
                self_term += f * (ins.theta * other.theta * (-(s[j] - s[l]).abs()).exp());
            }
        }
    }
    let e = model.e;
    let exponent = Complex64::new(-0.5 * (e * e * quad), 0.0) + cross * e - self_term * 0.5;
    let mut ph = Complex64::new(1.0, 0.0);
    for j in 1..=m {
        ph *= phase(&schedule.momenta[j - 1], &pos, idx[j - 1], idx[j]);
    }
    Ok(ph * exponent.exp())
}

/// `m`-point Euclidean Green function with Weyl insertions and `e^{−ΔsN}`
/// blocks (see [`Schedule`]).
pub fn green_n_point(model: &Model, schedule: &Schedule, ens: &Ensemble) -> Result<EstimateResult> {
    let idx = schedule.validate(model, ens)?;
    if model.kernel.d() != ens.d {
        return Err(Error::domain("kernel and ensemble dimensions differ"));
    }
    let sums = ens.batch_sums(1, |path| Ok(vec![green_sample(model, schedule, &idx, path)?]))?;
    let params = json!({
        "s": schedule.s,
        "t": schedule.t,
        "momenta": schedule.momenta,
        "thetas": schedule.insertions.iter().map(|x| x.as_ref().map(|w| w.theta)).collect::<Vec<_>>(),
    });
    Ok(mean_estimate(&sums, 0, ens, metadata("green", model, ens, params)))
}

#[derive(Debug, Clone, Serialize)]
pub struct DiamagneticReport {
    pub z_p: EstimateResult,
    pub z_0: EstimateResult,
    pub abs_z_p: f64,
    /// `Ẑ_t(0) − |Ẑ_t(P)|` on the shared sample set.
    pub margin: f64,
    pub holds: bool,
}

/// Compares `|Ẑ_t(P)|` with `Ẑ_t(0)` on one shared ensemble.
pub fn diamagnetic_check(model: &Model, p: &[f64], t: f64, ens: &Ensemble) -> Result<DiamagneticReport> {
    model.check(ens, p)?;
    let zero = vec![0.0; p.len()];
    let sums = ens.batch_sums(2, |path| {
        let w = partition_sample(model, &zero, t, path)?;
        let n = path.grid().index_of(t)?;
        let pos = path.positions();
        Ok(vec![w * phase(p, &pos, 0, n), w])
    })?;
    let meta = metadata("diamagnetic", model, ens, json!({ "P": p, "t": t }));
    let z_p = mean_estimate(&sums, 0, ens, meta.clone());
    let z_0 = mean_estimate(&sums, 1, ens, meta);
    let abs_z_p = z_p.mean.norm();
    let margin = z_0.mean.re - abs_z_p;
    // Equality at P = 0 is exact; elsewhere allow the last bit of the sums.
    let holds = margin >= -4.0 * f64::EPSILON * z_0.mean.re;
    Ok(DiamagneticReport { z_p, z_0, abs_z_p, margin, holds })
}

/// Mean of the discretized double action `q₁(K^{[0,t]}, K^{[0,t]})`.
pub fn double_action_mean(kernel: &PairKernel, rule: DiagonalRule, t: f64, ens: &Ensemble) -> Result<EstimateResult> {
    let n = ens.grid.index_of(t)?;
    let sums = ens.batch_sums(1, |path| {
        let pos = path.positions();
        let i = Interval { start: 0, end: n };
        Ok(vec![Complex64::new(q1_with_positions(path, &pos, i, i, kernel, rule)?, 0.0)])
    })?;
    let model = Model { kernel: kernel.clone(), e: 0.0, diagonal_rule: rule };
    Ok(mean_estimate(&sums, 0, ens, metadata("double_action", &model, ens, json!({ "t": t }))))
}

/// Mean of `‖∫₀ᵗ φ̃(· − b(s)) db_μ(s)‖²`.
pub fn burkholder_mean(kernel: &ScalarKernel, t: f64, mu: usize, ens: &Ensemble) -> Result<EstimateResult> {
    let sums = ens.batch_sums(1, |path| {
        Ok(vec![Complex64::new(crate::action::burkholder_norm(path, t, mu, kernel)?, 0.0)])
    })?;
    let meta = json!({ "estimator": "burkholder", "t": t, "mu": mu, "ensemble": ens.describe(), "version": crate::VERSION });
    Ok(mean_estimate(&sums, 0, ens, meta))
}

/// Gap between the path weight exponent at successive resolutions.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementGap {
    pub coarse_steps: usize,
    pub mean_abs_gap: f64,
    pub stderr: f64,
}

/// `E|A_{2n} − A_n|` for `levels` successive Brownian-bridge refinements of
/// each path, where `A` is the full action over the ensemble horizon.
pub fn refinement_gaps(model: &Model, ens: &Ensemble, levels: usize) -> Result<Vec<RefinementGap>> {
    let cfg = model.action_config();
    let t = ens.grid.t_end();
    let plain = Ensemble { antithetic: false, ..*ens };
    let sums = plain.batch_sums_with_stream(levels, |stream, path| {
        let mut cur = path.clone();
        let mut prev = crate::action::full_action(&cur, t, &cfg, &model.kernel)?;
        let mut out = Vec::with_capacity(levels);
        for level in 1..=levels as u64 {
            cur = cur.refine(ens.seed, stream, level);
            let a = crate::action::full_action(&cur, t, &cfg, &model.kernel)?;
            out.push(Complex64::new((a - prev).abs(), 0.0));
            prev = a;
        }
        Ok(out)
    })?;
    Ok((0..levels)
        .map(|l| {
            let r = mean_estimate(&sums, l, &plain, serde_json::Value::Null);
            RefinementGap { coarse_steps: ens.grid.n_steps() << l, mean_abs_gap: r.mean.re, stderr: r.stderr }
        })
        .collect())
}
