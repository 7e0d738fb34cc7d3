use super::{FockModel, Spectrum};
use crate::special::hermite_functions;
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct RelativeBoundReport {
    pub trials: usize,
    pub tolerance: f64,
    /// Largest `‖a(f)Ψ‖ − ‖f/√ω‖‖H_f^{1/2}Ψ‖ − ‖f‖‖Ψ‖` seen.
    pub max_excess_annihilation: f64,
    /// Same for `a†(f)`.
    pub max_excess_creation: f64,
    pub violations: usize,
}

/// Tests `‖a^♯(f)Ψ‖ ≤ ‖f/√ω‖ ‖H_f^{1/2}Ψ‖ + ‖f‖ ‖Ψ‖` on random states whose top
/// occupation shell is empty. `f` holds one coefficient per oscillator and
/// `a(f) = Σ √w conj(f_j) a_j`.
pub fn relative_bound_check(model: &FockModel, f: &[Complex64], trials: usize, seed: u64) -> Result<RelativeBoundReport> {
    let osc = model.oscillators();
    if f.len() != osc.len() {
        return Err(Error::domain(format!("f needs {} oscillator coefficients", osc.len())));
    }
    let norm_f: f64 = f.iter().zip(osc).map(|(x, o)| o.weight * x.norm_sqr()).sum::<f64>().sqrt();
    let norm_f_omega: f64 = f.iter().zip(osc).map(|(x, o)| o.weight * x.norm_sqr() / o.omega).sum::<f64>().sqrt();
    let n_max = model.basis().n_max();
    let dim = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tolerance = 1e-10;
    let (mut max_a, mut max_c, mut violations) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0);
    for _ in 0..trials {
        let psi: Vec<Complex64> = (0..dim)
            .map(|i| {
                let (re, im): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                if model.basis().total(i) < n_max {
                    Complex64::new(re, im)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let norm_psi: f64 = psi.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let hf_half: f64 = psi.iter().zip(model.h_f()).map(|(x, h)| h * x.norm_sqr()).sum::<f64>().sqrt();
        let mut a = vec![Complex64::new(0.0, 0.0); dim];
        let mut c = vec![Complex64::new(0.0, 0.0); dim];
        for (j, o) in osc.iter().enumerate() {
            let w = o.weight.sqrt();
            model.annihilator(j).add_apply(f[j].conj() * w, &psi, &mut a);
            model.annihilator(j).add_apply_transpose(f[j] * w, &psi, &mut c);
        }
        let rhs = norm_f_omega * hf_half + norm_f * norm_psi;
        let ea = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt() - rhs;
        let ec = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt() - rhs;
        max_a = max_a.max(ea);
        max_c = max_c.max(ec);
        violations += (ea > tolerance) as usize + (ec > tolerance) as usize;
    }
    Ok(RelativeBoundReport {
        trials,
        tolerance,
        max_excess_annihilation: max_a,
        max_excess_creation: max_c,
        violations,
    })
}

/// One real oscillator `H = ½ e² g² (a + a†)² + ω a†a`, the `P = 0` field
/// sector of a single mode pair with one polarization.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PositivityConfig {
    pub t: f64,
    pub e: f64,
    pub omega: f64,
    pub g: f64,
    pub n_max: usize,
    pub grid_size: usize,
    /// Extra levels of the comparison truncation used for the tail estimate.
    pub reference_extra: usize,
}

impl PositivityConfig {
    pub fn new(t: f64, e: f64, n_max: usize, grid_size: usize) -> Self {
        PositivityConfig { t, e, omega: 1.0, g: 1.0, n_max, grid_size, reference_extra: 26 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositivityVerdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub config: PositivityConfig,
    pub half_width: f64,
    /// Smallest kernel entry at `n_max + reference_extra` levels.
    pub min_entry: f64,
    /// Tail estimate of that kernel: difference to 8 more levels.
    pub reference_tail: f64,
    /// Smallest kernel entry at `n_max` levels.
    pub min_entry_at_n_max: f64,
    /// `max |G_{n_max} − G_ref|`.
    pub truncation_tail: f64,
    /// Smallest entry of `G_{n_max}` among those exceeding twice the tail.
    pub min_resolved_entry: f64,
    pub unresolved_entries: usize,
    pub max_imaginary: f64,
    pub verdict: PositivityVerdict,
}

fn conjugated_kernel(cfg: &PositivityConfig, levels: usize, x: &[f64]) -> Result<(DMatrix<f64>, f64)> {
    let n = levels + 1;
    let mut xop = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let v = (i as f64).sqrt();
        xop[(i - 1, i)] = v;
        xop[(i, i - 1)] = v;
    }
    let mut h = &xop * &xop * (0.5 * cfg.e * cfg.e * cfg.g * cfg.g);
    for i in 0..n {
        h[(i, i)] += cfg.omega * i as f64;
    }
    let spec = Spectrum::of(h)?;
    let mut s = DMatrix::<f64>::zeros(n, n);
    for c in 0..n {
        let v = spec.vectors.column(c);
        s += &v * v.transpose() * (-cfg.t * spec.values[c]).exp();
    }
    // ϑ = i^N: T_nm = i^{n−m} S_nm.
    let phase = |k: i64| match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let herm: Vec<Vec<f64>> = x.iter().map(|&xi| hermite_functions(levels, xi)).collect();
    let g = x.len();
    let mut re = DMatrix::<f64>::zeros(g, g);
    let mut max_im: f64 = 0.0;
    for a in 0..g {
        for b in 0..g {
            let mut acc = Complex64::new(0.0, 0.0);
            for nn in 0..n {
                let hn = herm[a][nn];
                for mm in 0..n {
                    if s[(nn, mm)] != 0.0 {
                        acc += phase(nn as i64 - mm as i64) * (hn * s[(nn, mm)] * herm[b][mm]);
                    }
                }
            }
            re[(a, b)] = acc.re;
            max_im = max_im.max(acc.im.abs());
        }
    }
    Ok((re, max_im))
}

/// Position-space kernel of `ϑ e^{−tH} ϑ⁻¹`, `ϑ = e^{iπN/2}`, for one real
/// oscillator, on a uniform grid over `±6` ground-state standard deviations.
///
/// The kernel is built at `n_max` and at `n_max + reference_extra` levels;
/// their difference estimates the truncation tail. Entries of the `n_max`
/// kernel smaller than twice that tail cannot be signed and are counted as
/// unresolved. The verdict is `Pass` when every resolved entry is positive
/// and the reference kernel's minimum exceeds its own tail estimate,
/// `Fail` when some entry is negative beyond its tail, and `Inconclusive`
/// otherwise.
pub fn positivity_check(cfg: &PositivityConfig) -> Result<PositivityReport> {
    if cfg.n_max < 12 || cfg.grid_size < 64 {
        return Err(Error::domain("positivity check needs n_max ≥ 12 and ≥ 64 grid points"));
    }
    if !(cfg.t > 0.0) || !(cfg.omega > 0.0) || !cfg.e.is_finite() || !cfg.g.is_finite() {
        return Err(Error::domain("positivity check needs t > 0, ω > 0 and finite couplings"));
    }
    let half_width = 6.0 / 2f64.sqrt();
    let g = cfg.grid_size;
    let x: Vec<f64> = (0..g).map(|i| -half_width + 2.0 * half_width * i as f64 / (g - 1) as f64).collect();
    let n_ref = cfg.n_max + cfg.reference_extra;
    let (gk, im_k) = conjugated_kernel(cfg, cfg.n_max, &x)?;
    let (gr, im_r) = conjugated_kernel(cfg, n_ref, &x)?;
    let (gr2, _) = conjugated_kernel(cfg, n_ref + 8, &x)?;
    let truncation_tail = (&gk - &gr).amax();
    let reference_tail = (&gr - &gr2).amax();
    let min_entry = gr.min();
    let min_entry_at_n_max = gk.min();
    let resolved: Vec<f64> = gk.iter().copied().filter(|v| v.abs() > 2.0 * truncation_tail).collect();
    let min_resolved_entry = resolved.iter().copied().fold(f64::INFINITY, f64::min);
    let unresolved_entries = g * g - resolved.len();
    let max_imaginary = im_k.max(im_r);
    let negative_beyond_tail = min_resolved_entry <= 0.0 || min_entry < -reference_tail;
    let verdict = if negative_beyond_tail || max_imaginary > 1e-8 {
        PositivityVerdict::Fail
    } else if min_entry > reference_tail {
        PositivityVerdict::Pass
    } else {
        PositivityVerdict::Inconclusive
    };
    Ok(PositivityReport {
        config: *cfg,
        half_width,
        min_entry,
        reference_tail,
        min_entry_at_n_max,
        truncation_tail,
        min_resolved_entry,
        unresolved_entries,
        max_imaginary,
        verdict,
    })
}

/// `E(P, e²)` over a grid with the monotonicity, concavity and ordering
/// checks at `P = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyCurves {
    pub momenta: Vec<Vec<f64>>,
    pub e2: Vec<f64>,
    /// `energies[i][j] = E(momenta[i], e2[j])`.
    pub energies: Vec<Vec<f64>>,
    pub zero_row: Option<usize>,
    pub e00: Option<f64>,
    pub max_decrease: f64,
    /// Second differences of `E(0, ·)` (uniform `e²` grid).
    pub second_differences: Vec<f64>,
    pub max_second_difference: f64,
    /// `min_j (E(P, e²_j) − E(0, e²_j))` over the nonzero momenta.
    pub min_ordering_margin: f64,
}

impl EnergyCurves {
    pub fn monotone(&self) -> bool {
        self.max_decrease <= 0.0
    }

    pub fn concave(&self, tol: f64) -> bool {
        self.max_second_difference <= tol
    }

    pub fn ordered(&self) -> bool {
        self.min_ordering_margin >= 0.0
    }
}

pub fn energy_curves(model: &FockModel, momenta: &[Vec<f64>], e2: &[f64]) -> Result<EnergyCurves> {
    if e2.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::domain("e² values must be nonnegative"));
    }
    let mut energies = Vec::with_capacity(momenta.len());
    for p in momenta {
        let row: Vec<f64> =
            e2.iter().map(|&x| model.ground_energy(p, x.sqrt())).collect::<Result<_>>()?;
        energies.push(row);
    }
    let zero_row = momenta.iter().position(|p| p.iter().all(|x| *x == 0.0));
    let mut out = EnergyCurves {
        momenta: momenta.to_vec(),
        e2: e2.to_vec(),
        energies,
        zero_row,
        e00: None,
        max_decrease: f64::NEG_INFINITY,
        second_differences: Vec::new(),
        max_second_difference: f64::NEG_INFINITY,
        min_ordering_margin: f64::INFINITY,
    };
    if let Some(z) = zero_row {
        let e0 = &out.energies[z];
        out.e00 = e2.iter().position(|x| *x == 0.0).map(|j| e0[j]);
        for w in e0.windows(2) {
            out.max_decrease = out.max_decrease.max(w[0] - w[1]);
        }
        out.second_differences = e0.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
        out.max_second_difference = out.second_differences.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (i, row) in out.energies.iter().enumerate() {
            if i != z {
                for (a, b) in row.iter().zip(e0) {
                    out.min_ordering_margin = out.min_ordering_margin.min(a - b);
                }
            }
        }
    }
    Ok(out)
}

/// `E(P, e²)` to first order in `e²` from the closed-form one-photon sum:
///
/// `½|P|² + e² [ ½ Σ_j c_j² − Σ_j c_j² (P·e_j)² / (½|P − k_j|² + ω_j − ½|P|²) ]`
///
/// with `c_j = √w φ̂/√(2ω)` and `e_j` the polarization of oscillator `j`.
/// Valid below the one-photon threshold.
pub fn perturbative_ground_energy(model: &FockModel, p: &[f64], e: f64) -> Result<f64> {
    if p.len() != 3 {
        return Err(Error::domain("momentum must be a 3-vector"));
    }
    let p2: f64 = p.iter().map(|x| x * x).sum();
    let mut first = 0.0;
    for osc in model.oscillators() {
        let c2 = osc.amplitude * osc.amplitude;
        let pe: f64 = (0..3).map(|mu| p[mu] * osc.polarization[mu]).sum();
        let pk2: f64 = (0..3).map(|mu| (p[mu] - osc.k[mu]).powi(2)).sum();
        let denom = 0.5 * pk2 + osc.omega - 0.5 * p2;
        if !(denom > 0.0) {
            return Err(Error::domain("momentum lies above the one-photon threshold"));
        }
        first += 0.5 * c2 - c2 * pe * pe / denom;
    }
    Ok(0.5 * p2 + e * e * first)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_photon_relative_bound_by_hand() {
        // f on one oscillator, Ψ = a†Ω: ‖a(f)Ψ‖ = √w|α|, right side 2√w|α| at ω = 1.
        let fm = FockModel::reference(3).unwrap();
        let alpha = Complex64::new(0.3, -0.4);
        let mut f = vec![Complex64::new(0.0, 0.0); 4];
        f[2] = alpha;
        let one = fm.basis().index_of(&[0, 0, 1, 0]).unwrap();
        let mut psi = vec![Complex64::new(0.0, 0.0); fm.dim()];
        psi[one] = Complex64::new(1.0, 0.0);
        let mut a = vec![Complex64::new(0.0, 0.0); fm.dim()];
        fm.annihilator(2).add_apply(alpha.conj(), &psi, &mut a);
        assert!((a[0].norm() - alpha.norm()).abs() < 1e-15);
        let report = relative_bound_check(&fm, &f, 200, 7).unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.max_excess_annihilation < 0.0);
    }

    #[test]
    fn relative_bound_random_states() {
        let fm = FockModel::reference(6).unwrap();
        let f: Vec<Complex64> = (0..4).map(|j| Complex64::new(0.2 * j as f64 - 0.3, 0.1)).collect();
        let report = relative_bound_check(&fm, &f, 300, 11).unwrap();
        assert_eq!(report.violations, 0, "{report:?}");
    }

    #[test]
    fn free_kernel_matches_mehler() {
        let cfg = PositivityConfig::new(1.0, 0.0, 30, 64);
        let x = [-1.3, -0.2, 0.0, 0.7, 2.1];
        let (g, im) = conjugated_kernel(&cfg, 60, &x).unwrap();
        assert_eq!(im, 0.0);
        let q = (-1.0f64).exp();
        for (a, &xa) in x.iter().enumerate() {
            for (b, &xb) in x.iter().enumerate() {
                let mehler = (std::f64::consts::PI * (1.0 - q * q)).powf(-0.5)
                    * (-((1.0 + q * q) * (xa * xa + xb * xb) - 4.0 * q * xa * xb) / (2.0 * (1.0 - q * q))).exp();
                assert!((g[(a, b)] - mehler).abs() < 1e-12, "{xa} {xb}");
            }
        }
    }

    #[test]
    fn perturbation_formula_at_zero_coupling() {
        let fm = FockModel::reference(2).unwrap();
        assert_eq!(perturbative_ground_energy(&fm, &[0.5, 0.0, 0.0], 0.0).unwrap(), 0.125);
        assert!(perturbative_ground_energy(&fm, &[0.0, 0.0, 3.0], 0.1).is_err());
    }
}
