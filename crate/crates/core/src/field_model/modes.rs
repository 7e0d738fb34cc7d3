use super::FormFactor;
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
#[cfg(test)]
use std::f64::consts::PI;

/// One discrete photon mode: momentum, quadrature weight and `φ̂(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub k: Vec<f64>,
    pub weight: f64,
    pub omega: f64,
    pub phi: f64,
}

impl Mode {
    /// `w |φ̂|² / ω`, the weight each mode contributes to the pair kernel.
    pub fn kernel_weight(&self) -> f64 {
        self.weight * self.phi * self.phi / self.omega
    }

    /// Field amplitude `√w φ̂ / √(2ω)` multiplying `a + a†`.
    pub fn field_amplitude(&self) -> f64 {
        self.weight.sqrt() * self.phi / (2.0 * self.omega).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ContinuumQuadrature,
    Handcrafted,
}

/// A finite set of modes closed under `k ↦ −k`.
///
/// Modes are stored in partner order: `modes[2p]` and `modes[2p+1]` are
/// `k` and `−k` (exact negation, equal weight and amplitude). Sums over the
/// set are taken pair by pair so that imaginary parts cancel exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    d: usize,
    modes: Vec<Mode>,
    provenance: Provenance,
}

impl ModeSet {
    pub fn empty(d: usize) -> Self {
        ModeSet { d, modes: Vec::new(), provenance: Provenance::Handcrafted }
    }

    /// Builds the set from one representative `(k, weight, φ̂)` per pair; the
    /// partner `−k` is added automatically.
    pub fn from_pairs(d: usize, reps: &[(Vec<f64>, f64, f64)], provenance: Provenance) -> Result<Self> {
        let mut modes = Vec::with_capacity(2 * reps.len());
        for (k, w, phi) in reps {
            if k.len() != d {
                return Err(Error::domain(format!("mode momentum has {} components, expected {d}", k.len())));
            }
            let omega = k.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(omega > 0.0 && omega.is_finite()) {
                return Err(Error::domain("mode momenta must be nonzero and finite"));
            }
            if !(*w > 0.0 && w.is_finite()) || !phi.is_finite() {
                return Err(Error::domain("mode weights must be positive and amplitudes finite"));
            }
            let neg: Vec<f64> = k.iter().map(|x| -x).collect();
            modes.push(Mode { k: k.clone(), weight: *w, omega, phi: *phi });
            modes.push(Mode { k: neg, weight: *w, omega, phi: *phi });
        }
        Ok(ModeSet { d, modes, provenance })
    }

    /// Accepts an arbitrary list of modes and checks `±k` closure, pairing
    /// each mode with its partner. Fails if any mode is unmatched.
    pub fn from_modes(d: usize, list: Vec<(Vec<f64>, f64, f64)>) -> Result<Self> {
        let n = list.len();
        let mut used = vec![false; n];
        let mut reps = Vec::new();
        for i in 0..n {
            if used[i] {
                continue;
            }
            used[i] = true;
            let (k, w, phi) = &list[i];
            let partner = (0..n).find(|&j| {
                !used[j]
                    && list[j].0.len() == k.len()
                    && list[j].0.iter().zip(k).all(|(a, b)| *a == -*b)
                    && list[j].1 == *w
                    && list[j].2 == *phi
            });
            match partner {
                Some(j) => used[j] = true,
                None => {
                    return Err(Error::domain(format!(
                        "mode k = {k:?} has no partner −k with equal weight and amplitude"
                    )))
                }
            }
            reps.push((k.clone(), *w, *phi));
        }
        ModeSet::from_pairs(d, &reps, Provenance::Handcrafted)
    }

    /// Handcrafted pairs with amplitudes read off a form factor.
    pub fn handcrafted(ff: &FormFactor, reps: &[(Vec<f64>, f64)]) -> Result<Self> {
        let with_phi: Vec<_> = reps
            .iter()
            .map(|(k, w)| {
                let kn = k.iter().map(|x| x * x).sum::<f64>().sqrt();
                (k.clone(), *w, ff.value(kn))
            })
            .collect();
        ModeSet::from_pairs(ff.d(), &with_phi, Provenance::Handcrafted)
    }

    /// Product quadrature of `∫ dᵈk` inside the cutoff: Gauss–Legendre in
    /// `|k|` times (d=3) Gauss–Legendre in `cos ϑ` and a uniform azimuth, or
    /// (d=2) a uniform angle. `n_polar` and `n_azimuth` must be even so that
    /// the node set is closed under `k ↦ −k`.
    pub fn continuum_quadrature(ff: &FormFactor, n_radial: usize, n_polar: usize, n_azimuth: usize) -> Result<Self> {
        if n_radial == 0 || n_azimuth == 0 || n_azimuth % 2 == 1 {
            return Err(Error::domain("need n_radial ≥ 1 and an even n_azimuth"));
        }
        let (xr, wr) = gauss_legendre(n_radial);
        let lam = ff.lambda();
        let radial: Vec<(f64, f64)> = xr
            .iter()
            .zip(&wr)
            .map(|(x, w)| (0.5 * lam * (x + 1.0), 0.5 * lam * w))
            .collect();
        let mut reps = Vec::new();
        match ff.d() {
            2 => {
                let dphi = TAU / n_azimuth as f64;
                for &(r, w) in &radial {
                    for j in 0..n_azimuth / 2 {
                        let a = (j as f64 + 0.5) * dphi;
                        reps.push((vec![r * a.cos(), r * a.sin()], w * r * dphi, ff.value(r)));
                    }
                }
            }
            3 => {
                if n_polar == 0 || n_polar % 2 == 1 {
                    return Err(Error::domain("n_polar must be even and positive"));
                }
                let (xc, wc) = gauss_legendre(n_polar);
                let dphi = TAU / n_azimuth as f64;
                for &(r, w) in &radial {
                    for (c, wcos) in xc.iter().zip(&wc).filter(|(c, _)| **c > 0.0) {
                        let s = (1.0 - c * c).sqrt();
                        for j in 0..n_azimuth {
                            let a = (j as f64 + 0.5) * dphi;
                            reps.push((
                                vec![r * s * a.cos(), r * s * a.sin(), r * c],
                                w * r * r * wcos * dphi,
                                ff.value(r),
                            ));
                        }
                    }
                }
            }
            d => {
                return Err(Error::domain(format!("continuum quadrature is implemented for d=2,3 only, not d={d}")))
            }
        }
        ModeSet::from_pairs(ff.d(), &reps, Provenance::ContinuumQuadrature)
    }

    /// The reference model: one pair `k = ±(0,0,1)`, weight 1, `φ̂ = 1`.
    pub fn reference_pair() -> Self {
        ModeSet::from_pairs(3, &[(vec![0.0, 0.0, 1.0], 1.0, 1.0)], Provenance::Handcrafted)
            .expect("reference pair is valid")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn n_pairs(&self) -> usize {
        self.modes.len() / 2
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Index of the partner `−k` of mode `m`.
    pub fn partner(&self, m: usize) -> usize {
        m ^ 1
    }

    /// `Σ w |φ̂|²/ω` over the set, i.e. the discrete `‖φ̂/√ω‖²`.
    pub fn norm_sq_over_sqrt_omega(&self) -> f64 {
        self.modes.iter().map(Mode::kernel_weight).sum()
    }
}
