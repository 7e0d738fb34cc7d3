//! Exact finite-dimensional realization of the fiber Hamiltonians on a
//! truncated Fock space over a discrete [`ModeSet`].
//!
//! Each `(mode, polarization)` pair is one oscillator. The modes `k` and `−k`
//! of a pair stay separate oscillators, so that `P_f` is diagonal with the
//! exact momentum assignment and `A(0)` has real couplings
//! `√w φ̂/√(2ω) e(k, j)` on `a + a†`.

mod checks;
mod sparse;

pub use checks::{
    energy_curves, perturbative_ground_energy, positivity_check, relative_bound_check, EnergyCurves,
    PositivityConfig, PositivityReport, PositivityVerdict, RelativeBoundReport,
};
pub use sparse::SparseOp;

use crate::estimators::Schedule;
use crate::field_model::{ModeFunction, ModeSet};
use crate::polarization::PolarizationBasis;
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen, Vector3};
use num_complex::Complex64;
use std::collections::HashMap;

/// Largest basis the dense routines accept.
pub const MAX_DIM: usize = 5000;

/// Occupation-number basis: all tuples with total occupation `≤ n_max`, in
/// lexicographic order, so the vacuum is index 0.
#[derive(Debug, Clone)]
pub struct FockBasis {
    n_osc: usize,
    n_max: usize,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl FockBasis {
    pub fn new(n_osc: usize, n_max: usize) -> Result<Self> {
        let dim = Self::expected_dim(n_osc, n_max);
        if dim > MAX_DIM as f64 {
            return Err(Error::domain(format!(
                "Fock basis with {n_osc} oscillators and n_max={n_max} has dimension {dim}, limit is {MAX_DIM}"
            )));
        }
        if n_max > u8::MAX as usize {
            return Err(Error::domain("n_max too large"));
        }
        let mut states = Vec::with_capacity(dim as usize);
        let mut cur = vec![0u8; n_osc];
        fill(&mut states, &mut cur, 0, n_max);
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(FockBasis { n_osc, n_max, states, index })
    }

    /// `C(n_osc + n_max, n_max)`.
    pub fn expected_dim(n_osc: usize, n_max: usize) -> f64 {
        crate::special::binomial(n_osc + n_max, n_max)
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn n_osc(&self) -> usize {
        self.n_osc
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn state(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn total(&self, i: usize) -> usize {
        self.states[i].iter().map(|&n| n as usize).sum()
    }

    /// Annihilator of oscillator `j`: `a|n⟩ = √n_j |n − e_j⟩`.
    pub fn annihilation(&self, j: usize) -> SparseOp {
        let mut trip = Vec::new();
        let mut lowered = vec![0u8; self.n_osc];
        for (i, s) in self.states.iter().enumerate() {
            if s[j] > 0 {
                lowered.copy_from_slice(s);
                lowered[j] -= 1;
                let r = self.index[&lowered];
                trip.push((r, i, (s[j] as f64).sqrt()));
            }
        }
        SparseOp::from_triplets(self.dim(), trip)
    }
}

fn fill(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, pos: usize, left: usize) {
    if pos == cur.len() {
        out.push(cur.clone());
        return;
    }
    for n in 0..=left {
        cur[pos] = n as u8;
        fill(out, cur, pos + 1, left - n);
    }
    cur[pos] = 0;
}

/// One oscillator: a mode index and a polarization index.
#[derive(Debug, Clone)]
pub struct Oscillator {
    pub mode: usize,
    pub pol: usize,
    pub polarization: Vector3<f64>,
    pub omega: f64,
    pub k: Vector3<f64>,
    /// `√w φ̂ / √(2ω)`.
    pub amplitude: f64,
    pub weight: f64,
}

/// Ladder operators, number-type diagonals and the field at the origin.
#[derive(Debug, Clone)]
pub struct FockModel {
    modes: ModeSet,
    basis: FockBasis,
    oscillators: Vec<Oscillator>,
    annihilators: Vec<SparseOp>,
    number: Vec<f64>,
    h_f: Vec<f64>,
    p_f: [Vec<f64>; 3],
    field: [SparseOp; 3],
}

impl FockModel {
    pub fn new(modes: &ModeSet, polarization: &PolarizationBasis, n_max: usize) -> Result<Self> {
        if modes.d() != 3 {
            return Err(Error::domain("the Fock oracle is implemented for d = 3"));
        }
        let mut oscillators = Vec::new();
        for (m, mode) in modes.modes().iter().enumerate() {
            let k = Vector3::new(mode.k[0], mode.k[1], mode.k[2]);
            let frame = polarization.vectors(&k).map_err(|e| {
                Error::DegenerateDirection(format!("polarization frame at mode {m} ({k:?}): {e}; choose another mode set"))
            })?;
            for (j, e) in frame.into_iter().enumerate() {
                oscillators.push(Oscillator {
                    mode: m,
                    pol: j,
                    polarization: e,
                    omega: mode.omega,
                    k,
                    amplitude: mode.field_amplitude(),
                    weight: mode.weight,
                });
            }
        }
        let basis = FockBasis::new(oscillators.len(), n_max)?;
        let dim = basis.dim();
        let annihilators: Vec<SparseOp> = (0..oscillators.len()).map(|j| basis.annihilation(j)).collect();
        let mut number = vec![0.0; dim];
        let mut h_f = vec![0.0; dim];
        let mut p_f = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
        for i in 0..dim {
            for (j, osc) in oscillators.iter().enumerate() {
                let n = basis.state(i)[j] as f64;
                if n == 0.0 {
                    continue;
                }
                number[i] += n;
                h_f[i] += n * osc.omega;
                for mu in 0..3 {
                    p_f[mu][i] += n * osc.k[mu];
                }
            }
        }
        let field = [0, 1, 2].map(|mu| {
            let mut trip = Vec::new();
            for (j, osc) in oscillators.iter().enumerate() {
                let c = osc.amplitude * osc.polarization[mu];
                if c == 0.0 {
                    continue;
                }
                for &(r, col, v) in annihilators[j].triplets().iter() {
                    trip.push((r, col, c * v));
                    trip.push((col, r, c * v));
                }
            }
            SparseOp::from_triplets(dim, trip)
        });
        Ok(FockModel { modes: modes.clone(), basis, oscillators, annihilators, number, h_f, p_f, field })
    }

    /// The single-pair reference model `k = ±(0,0,1)` with the axis-cross
    /// frame around `(1,0,0)`.
    pub fn reference(n_max: usize) -> Result<Self> {
        FockModel::new(&ModeSet::reference_pair(), &PolarizationBasis::axis_cross(Vector3::x())?, n_max)
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn oscillators(&self) -> &[Oscillator] {
        &self.oscillators
    }

    pub fn annihilator(&self, j: usize) -> &SparseOp {
        &self.annihilators[j]
    }

    /// Diagonal of `N`.
    pub fn number(&self) -> &[f64] {
        &self.number
    }

    /// Diagonal of `H_f`.
    pub fn h_f(&self) -> &[f64] {
        &self.h_f
    }

    /// Diagonal of `P_f,μ`.
    pub fn p_f(&self, mu: usize) -> &[f64] {
        &self.p_f[mu]
    }

    /// `A_μ(0)`.
    pub fn field(&self, mu: usize) -> &SparseOp {
        &self.field[mu]
    }

    fn check_p(p: &[f64]) -> Result<()> {
        if p.len() != 3 || p.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("total momentum must be a finite 3-vector"));
        }
        Ok(())
    }

    /// `K(P) = ½ Σ_μ M_μ²` with `M_μ = P_μ − P_f,μ − e A_μ(0)`, squared on the
    /// truncated space.
    pub fn build_k(&self, p: &[f64], e: f64) -> Result<DMatrix<f64>> {
        Self::check_p(p)?;
        let dim = self.dim();
        let mut k = DMatrix::<f64>::zeros(dim, dim);
        for mu in 0..3 {
            let diag: Vec<f64> = self.p_f[mu].iter().map(|x| p[mu] - x).collect();
            let m = self.field[mu].scaled(-e).with_diagonal(&diag);
            m.accumulate_square(0.5, &mut k);
        }
        // The square of a symmetric matrix is symmetric; enforce it bitwise.
        for i in 0..dim {
            for j in 0..i {
                let s = 0.5 * (k[(i, j)] + k[(j, i)]);
                k[(i, j)] = s;
                k[(j, i)] = s;
            }
        }
        Ok(k)
    }

    /// `H(P) = K(P) + H_f`.
    pub fn build_h(&self, p: &[f64], e: f64) -> Result<DMatrix<f64>> {
        let mut h = self.build_k(p, e)?;
        for i in 0..self.dim() {
            h[(i, i)] += self.h_f[i];
        }
        Ok(h)
    }

    /// Ascending eigenvalues of `H(P)` without eigenvectors.
    pub fn levels(&self, p: &[f64], e: f64) -> Result<Vec<f64>> {
        eigenvalues(self.build_h(p, e)?)
    }

    /// `E(P, e²) = inf σ(H(P))`.
    pub fn ground_energy(&self, p: &[f64], e: f64) -> Result<f64> {
        Ok(self.levels(p, e)?[0])
    }

    /// Spectral decomposition of `H(P)`.
    pub fn hamiltonian(&self, p: &[f64], e: f64) -> Result<Spectrum> {
        Spectrum::of(self.build_h(p, e)?)
    }

    /// Oscillator coefficients `α_{m,j} = √(w/2) e(k_m, j)·f̂(k_m)` of
    /// `A(f) = Σ α a† + conj(α) a`.
    pub fn weyl_coefficients(&self, f: &ModeFunction) -> Result<Vec<Complex64>> {
        if f.n_modes() != self.modes.len() || f.d() != 3 {
            return Err(Error::domain("test function does not match the oracle mode set"));
        }
        Ok(self
            .oscillators
            .iter()
            .map(|osc| {
                let fm = f.at(osc.mode);
                let mut ef = Complex64::new(0.0, 0.0);
                for mu in 0..3 {
                    ef += fm[mu] * osc.polarization[mu];
                }
                ef * (osc.weight / 2.0).sqrt()
            })
            .collect())
    }

    /// `A(f) v` for oscillator coefficients `alpha`.
    pub fn apply_weyl_field(&self, alpha: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for (j, a) in alpha.iter().enumerate() {
            if *a == Complex64::new(0.0, 0.0) {
                continue;
            }
            self.annihilators[j].add_apply(a.conj(), v, &mut out);
            self.annihilators[j].add_apply_transpose(*a, v, &mut out);
        }
        out
    }

    /// `e^{iθA(f)} v` by a stepped Taylor series.
    pub fn apply_weyl(&self, alpha: &[Complex64], theta: f64, v: &[Complex64]) -> Vec<Complex64> {
        // ‖A(f)‖ on the truncated space is at most 2√n_max Σ|α|.
        let bound = 2.0 * (self.basis.n_max() as f64).sqrt() * alpha.iter().map(|a| a.norm()).sum::<f64>() * theta.abs();
        let steps = (bound / 0.5).ceil().max(1.0) as usize;
        let h = theta / steps as f64;
        let mut cur = v.to_vec();
        for _ in 0..steps {
            let mut term = cur.clone();
            let mut acc = cur.clone();
            for n in 1..=40 {
                let next = self.apply_weyl_field(alpha, &term);
                let c = Complex64::new(0.0, h / n as f64);
                term = next.into_iter().map(|x| x * c).collect();
                let size: f64 = term.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                for (a, t) in acc.iter_mut().zip(&term) {
                    *a += *t;
                }
                if size < 1e-18 {
                    break;
                }
            }
            cur = acc;
        }
        cur
    }

    /// Vacuum vector.
    pub fn vacuum(&self) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.dim()];
        v[0] = Complex64::new(1.0, 0.0);
        v
    }

    /// `⟨e^{−βN}⟩` in `ψ = e^{−tH(P)}Ω`.
    pub fn expn_expectation(&self, spec: &Spectrum, beta: f64, t: f64) -> f64 {
        let psi = spec.semigroup_apply_real(t, &unit(self.dim(), 0));
        let num: f64 = psi.iter().zip(&self.number).map(|(x, n)| x * x * (-beta * n).exp()).sum();
        let den: f64 = psi.iter().map(|x| x * x).sum();
        num / den
    }

    /// `⟨e^{−βN}⟩` in the ground state.
    pub fn expn_ground(&self, spec: &Spectrum, beta: f64) -> f64 {
        let v = spec.vectors.column(0);
        v.iter().zip(&self.number).map(|(x, n)| x * x * (-beta * n).exp()).sum()
    }

    /// `⟨e^{−iA(f)}⟩` in `ψ = e^{−tH(P)}Ω`.
    pub fn weyl_expectation(&self, spec: &Spectrum, f: &ModeFunction, t: f64) -> Result<Complex64> {
        let alpha = self.weyl_coefficients(f)?;
        let psi: Vec<Complex64> =
            spec.semigroup_apply_real(t, &unit(self.dim(), 0)).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        Ok(self.normalized_weyl(&alpha, &psi))
    }

    /// `⟨e^{−iA(f)}⟩` in the ground state.
    pub fn weyl_ground(&self, spec: &Spectrum, f: &ModeFunction) -> Result<Complex64> {
        let alpha = self.weyl_coefficients(f)?;
        let psi: Vec<Complex64> = spec.vectors.column(0).iter().map(|x| Complex64::new(*x, 0.0)).collect();
        Ok(self.normalized_weyl(&alpha, &psi))
    }

    fn normalized_weyl(&self, alpha: &[Complex64], psi: &[Complex64]) -> Complex64 {
        let w = self.apply_weyl(alpha, -1.0, psi);
        let num: Complex64 = psi.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
        let den: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        num / den
    }

    /// Euclidean Green function of a [`Schedule`], applied right to left
    /// starting from the vacuum.
    pub fn green(&self, schedule: &Schedule, e: f64) -> Result<Complex64> {
        let m = schedule.m();
        if m == 0 || schedule.s.len() != m + 1 || schedule.t.len() != m + 1 || schedule.insertions.len() + 1 != m {
            return Err(Error::domain("malformed schedule"));
        }
        let mut v = self.vacuum();
        for j in (1..=m).rev() {
            let spec = self.hamiltonian(&schedule.momenta[j - 1], e)?;
            v = spec.semigroup_apply(schedule.t[j] - schedule.t[j - 1], &v);
            let ds = schedule.s[j] - schedule.s[j - 1];
            for (x, n) in v.iter_mut().zip(&self.number) {
                *x *= (-ds * n).exp();
            }
            if j >= 2 {
                if let Some(ins) = &schedule.insertions[j - 2] {
                    let alpha = self.weyl_coefficients(&ins.f)?;
                    v = self.apply_weyl(&alpha, ins.theta, &v);
                }
            }
        }
        Ok(v[0])
    }
}

fn unit(dim: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[i] = 1.0;
    v
}

/// Ascending eigenvalues of a symmetric matrix; diagonal input is read off
/// exactly.
pub fn eigenvalues(m: DMatrix<f64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n != m.ncols() || n == 0 {
        return Err(Error::domain("spectrum needs a nonempty square matrix"));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("operator has non-finite entries".into()));
    }
    let mut vals: Vec<f64> = if is_diagonal(&m) {
        (0..n).map(|i| m[(i, i)]).collect()
    } else {
        m.symmetric_eigenvalues().iter().copied().collect()
    };
    if vals.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("symmetric eigensolver produced non-finite values".into()));
    }
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    (0..n).all(|j| (0..n).all(|i| i == j || m[(i, j)] == 0.0))
}

/// Number of levels within `1e−9 ×` spectral width of the lowest.
pub fn ground_multiplicity(values: &[f64]) -> usize {
    let width = (values[values.len() - 1] - values[0]).max(f64::MIN_POSITIVE);
    let tol = 1e-9 * width;
    values.iter().take_while(|&&x| x - values[0] <= tol).count()
}

/// Distance from the lowest level to the next distinct one.
pub fn spectral_gap(values: &[f64]) -> Option<f64> {
    values.get(ground_multiplicity(values)).map(|x| x - values[0])
}

/// Ascending eigenvalues with orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Spectrum {
    /// Full dense eigensolve. Diagonal input is read off exactly.
    pub fn of(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() || n == 0 {
            return Err(Error::domain("spectrum needs a nonempty square matrix"));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("operator has non-finite entries".into()));
        }
        let (vals, vecs) = if !is_diagonal(&m) {
            let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0)
                .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
            (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), eig.eigenvectors)
        } else {
            ((0..n).map(|i| m[(i, i)]).collect(), DMatrix::identity(n, n))
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        let values = order.iter().map(|&i| vals[i]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| vecs[(r, order[c])]);
        Ok(Spectrum { values, vectors })
    }

    pub fn ground_energy(&self) -> f64 {
        self.values[0]
    }

    pub fn ground_multiplicity(&self) -> usize {
        ground_multiplicity(&self.values)
    }

    pub fn gap(&self) -> Option<f64> {
        spectral_gap(&self.values)
    }

    /// `(Ω, e^{−t·op} Ω)` with `Ω` the first basis vector.
    pub fn vacuum_element(&self, t: f64) -> f64 {
        let row = self.vectors.row(0);
        row.iter().zip(&self.values).map(|(v, l)| v * v * (-t * l).exp()).sum()
    }

    pub fn semigroup_apply_real(&self, t: f64, v: &[f64]) -> Vec<f64> {
        let coef: Vec<f64> = (0..self.values.len())
            .map(|c| self.vectors.column(c).dot(&nalgebra::DVectorView::from_slice(v, v.len())) * (-t * self.values[c]).exp())
            .collect();
        let out = &self.vectors * nalgebra::DVector::from_vec(coef);
        out.iter().copied().collect()
    }

    pub fn semigroup_apply(&self, t: f64, v: &[Complex64]) -> Vec<Complex64> {
        let re: Vec<f64> = v.iter().map(|x| x.re).collect();
        let im: Vec<f64> = v.iter().map(|x| x.im).collect();
        let (a, b) = (self.semigroup_apply_real(t, &re), self.semigroup_apply_real(t, &im));
        a.into_iter().zip(b).map(|(x, y)| Complex64::new(x, y)).collect()
    }

    /// `(Ψ, e^{−t·op} Φ)`.
    pub fn semigroup_element(&self, psi: &[Complex64], phi: &[Complex64], t: f64) -> Complex64 {
        let w = self.semigroup_apply(t, phi);
        psi.iter().zip(&w).map(|(a, b)| a.conj() * b).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::WeylInsertion;

    fn herm_residual(m: &DMatrix<f64>) -> f64 {
        (m - m.transpose()).amax()
    }

    #[test]
    fn basis_size_and_order() {
        let b = FockBasis::new(4, 10).unwrap();
        assert_eq!(b.dim(), 1001);
        assert_eq!(b.dim() as f64, FockBasis::expected_dim(4, 10));
        assert_eq!(b.state(0), &[0, 0, 0, 0]);
        assert_eq!(b.state(1), &[0, 0, 0, 1]);
        for i in 1..b.dim() {
            assert!(b.state(i - 1) < b.state(i));
        }
        assert!(FockBasis::new(8, 12).is_err());
    }

    #[test]
    fn truncated_ccr() {
        let b = FockBasis::new(2, 5).unwrap();
        let a = b.annihilation(1);
        let ad = a.transpose();
        let comm = a.product_dense(&ad) - ad.product_dense(&a);
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                if b.total(i) < b.n_max() && b.total(j) < b.n_max() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((comm[(i, j)] - want).abs() < 1e-14, "{i} {j}");
                }
            }
        }
    }

    #[test]
    fn diagonal_operators() {
        let fm = FockModel::reference(4).unwrap();
        assert_eq!(fm.number()[0], 0.0);
        assert_eq!(fm.h_f()[0], 0.0);
        for i in 0..fm.dim() {
            assert_eq!(fm.number()[i], fm.basis().total(i) as f64);
            // ω = 1 for every oscillator.
            assert_eq!(fm.h_f()[i], fm.number()[i]);
            let s = fm.basis().state(i);
            // Oscillators 0,1 carry +z, 2,3 carry −z.
            assert_eq!(fm.p_f(2)[i], (s[0] + s[1]) as f64 - (s[2] + s[3]) as f64);
        }
    }

    #[test]
    fn field_matrix_elements_by_hand() {
        let fm = FockModel::reference(3).unwrap();
        let c = 1.0 / 2f64.sqrt();
        let b = fm.basis();
        let dense: Vec<DMatrix<f64>> = (0..3).map(|mu| fm.field(mu).to_dense()).collect();
        // Frame for k = +z around n = x: e1 = ẑ × x̂ = ŷ, e2 = ẑ × ŷ = −x̂.
        let one = b.index_of(&[1, 0, 0, 0]).unwrap();
        assert!((dense[1][(one, 0)] - c).abs() < 1e-15);
        assert!((dense[0][(one, 0)]).abs() < 1e-15);
        let two = b.index_of(&[2, 0, 0, 0]).unwrap();
        assert!((dense[1][(two, one)] - c * 2f64.sqrt()).abs() < 1e-15);
        let x1 = b.index_of(&[0, 1, 0, 0]).unwrap();
        assert!((dense[0][(x1, 0)] + c).abs() < 1e-15);
        for d in &dense {
            assert_eq!(herm_residual(d), 0.0);
            assert_eq!(d.column(0).iter().filter(|x| **x != 0.0).count() <= 4, true);
        }
        // Vacuum variance Σ w δ⊥_μμ φ̂²/(2ω): 1/2 per transverse axis from two modes.
        let var_x: f64 = dense[0].column(0).iter().map(|x| x * x).sum();
        let var_z: f64 = dense[2].column(0).iter().map(|x| x * x).sum();
        assert!((var_x - 1.0).abs() < 1e-14);
        assert_eq!(var_z, 0.0);
    }

    #[test]
    fn h_is_k_plus_hf() {
        let fm = FockModel::reference(4).unwrap();
        let p = [0.3, -0.2, 0.7];
        let h = fm.build_h(&p, 0.6).unwrap();
        let k = fm.build_k(&p, 0.6).unwrap();
        assert_eq!(herm_residual(&h), 0.0);
        for i in 0..fm.dim() {
            for j in 0..fm.dim() {
                let want = if i == j { k[(i, j)] + fm.h_f()[i] } else { k[(i, j)] };
                assert_eq!(h[(i, j)], want);
            }
        }
    }

    #[test]
    fn free_single_mode_levels() {
        let ms = ModeSet::from_pairs(3, &[(vec![0.0, 0.0, 1.0], 1.0, 1.0)], crate::field_model::Provenance::Handcrafted)
            .unwrap();
        let fm = FockModel::new(&ms, &PolarizationBasis::axis_cross(Vector3::x()).unwrap(), 3).unwrap();
        let spec = fm.hamiltonian(&[0.0; 3], 0.0).unwrap();
        assert_eq!(spec.ground_energy(), 0.0);
        assert_eq!(spec.ground_multiplicity(), 1);
        // n photons all along +z: n²/2 + n.
        let mut seen: Vec<f64> = spec.values.clone();
        seen.dedup();
        for n in 0..=3 {
            let lvl = 0.5 * (n * n) as f64 + n as f64;
            assert!(seen.iter().any(|x| (x - lvl).abs() < 1e-15), "{lvl}");
        }
    }

    #[test]
    fn semigroup_at_zero_time_is_inner_product() {
        let fm = FockModel::reference(4).unwrap();
        let spec = fm.hamiltonian(&[0.5, 0.0, 0.0], 0.4).unwrap();
        let psi: Vec<Complex64> = (0..fm.dim()).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let phi: Vec<Complex64> = (0..fm.dim()).map(|i| Complex64::new(1.0 / (1.0 + i as f64), 0.1)).collect();
        let want: Complex64 = psi.iter().zip(&phi).map(|(a, b)| a.conj() * b).sum();
        assert!((spec.semigroup_element(&psi, &phi, 0.0) - want).norm() < 1e-12);
        assert!((spec.vacuum_element(0.0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn free_vacuum_element() {
        let fm = FockModel::reference(4).unwrap();
        let p = [0.5, 0.0, 0.0];
        let spec = fm.hamiltonian(&p, 0.0).unwrap();
        for t in [0.5, 1.0, 2.0] {
            assert!((spec.vacuum_element(t) - (-t * 0.125f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn coupling_sign_flip_is_isospectral() {
        let fm = FockModel::reference(5).unwrap();
        let p = [0.5, 0.2, -0.1];
        let a = fm.levels(&p, 0.7).unwrap();
        let b = fm.levels(&p, -0.7).unwrap();
        let full = fm.hamiltonian(&p, 0.7).unwrap();
        for (x, y) in a.iter().zip(&full.values) {
            assert!((x - y).abs() < 1e-10);
        }
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn weyl_vacuum_expectation() {
        // e = 0: the vacuum is the ground state, ⟨e^{−iA(f)}⟩ = e^{−q₀(f,f)/2}.
        let fm = FockModel::reference(10).unwrap();
        let f = ModeFunction::real_even(fm.modes(), &[vec![0.4, -0.3, 0.2]]).unwrap();
        let spec = fm.hamiltonian(&[0.0; 3], 0.0).unwrap();
        let q0 = crate::field_model::q0_form(fm.modes(), &f, &f).unwrap().re;
        let w = fm.weyl_expectation(&spec, &f, 1.0).unwrap();
        assert!((w.re - (-0.5 * q0).exp()).abs() < 1e-12, "{w} {q0}");
        assert!(w.im.abs() < 1e-14);
    }

    #[test]
    fn weyl_is_unitary() {
        let fm = FockModel::reference(6).unwrap();
        let f = ModeFunction::real_even(fm.modes(), &[vec![0.1, 0.2, 0.0]]).unwrap();
        let alpha = fm.weyl_coefficients(&f).unwrap();
        let v: Vec<Complex64> = (0..fm.dim())
            .map(|i| if fm.basis().total(i) < 2 { Complex64::new(1.0, i as f64) } else { Complex64::new(0.0, 0.0) })
            .collect();
        let w = fm.apply_weyl(&alpha, 0.8, &v);
        let back = fm.apply_weyl(&alpha, -0.8, &w);
        let err: f64 = back.iter().zip(&v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn green_reduces_to_vacuum_element() {
        let fm = FockModel::reference(6).unwrap();
        let p = vec![0.5, 0.0, 0.0];
        let one = Schedule { s: vec![0.0, 0.0], t: vec![0.0, 1.5], momenta: vec![p.clone()], insertions: vec![] };
        let g = fm.green(&one, 0.4).unwrap();
        let z = fm.hamiltonian(&p, 0.4).unwrap().vacuum_element(1.5);
        assert!((g.re - z).abs() < 1e-13 && g.im == 0.0);
        // Two blocks with an identity insertion (θ = 0) and s-gap β give ⟨ψ, e^{−βN} ψ⟩.
        let f = ModeFunction::real_even(fm.modes(), &[vec![0.3, 0.1, 0.0]]).unwrap();
        let two = Schedule {
            s: vec![0.0, 0.0, 0.7],
            t: vec![0.0, 1.0, 2.0],
            momenta: vec![p.clone(), p.clone()],
            insertions: vec![Some(WeylInsertion { f, theta: 0.0 })],
        };
        let spec = fm.hamiltonian(&p, 0.4).unwrap();
        let psi = spec.semigroup_apply_real(1.0, &unit(fm.dim(), 0));
        let want: f64 = psi.iter().zip(fm.number()).map(|(x, n)| x * x * (-0.7 * n).exp()).sum();
        let g2 = fm.green(&two, 0.4).unwrap();
        assert!((g2.re - want).abs() < 1e-13, "{g2} {want}");
    }
}
