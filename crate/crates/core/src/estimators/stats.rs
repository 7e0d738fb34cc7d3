//! Ensembles, batch means and the [`EstimateResult`] record.

use crate::paths::{sample_path, BrownianPath, PathGrid};
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_BATCHES: usize = 32;
pub const MIN_BATCHES: usize = 16;

/// A reproducible set of Brownian paths: streams `0..n_paths` of `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ensemble {
    #[serde(skip)]
    pub grid: PathGrid,
    pub t_end: f64,
    pub n_steps: usize,
    pub d: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Pair every path with its reflection `−b` and average the two.
    pub antithetic: bool,
    pub n_batches: usize,
}

impl Ensemble {
    pub fn new(grid: PathGrid, d: usize, n_paths: usize, seed: u64) -> Result<Self> {
        Ensemble::with_batches(grid, d, n_paths, seed, true, DEFAULT_BATCHES)
    }

    pub fn with_batches(grid: PathGrid, d: usize, n_paths: usize, seed: u64, antithetic: bool, n_batches: usize) -> Result<Self> {
        if n_batches < MIN_BATCHES {
            return Err(Error::domain(format!("need at least {MIN_BATCHES} batches, got {n_batches}")));
        }
        if n_paths < n_batches {
            return Err(Error::domain(format!("{n_paths} paths cannot fill {n_batches} batches")));
        }
        Ok(Ensemble {
            grid,
            t_end: grid.t_end(),
            n_steps: grid.n_steps(),
            d,
            n_paths,
            seed,
            antithetic,
            n_batches,
        })
    }

    /// Same ensemble on another grid (same streams).
    pub fn on_grid(&self, grid: PathGrid) -> Self {
        Ensemble { grid, t_end: grid.t_end(), n_steps: grid.n_steps(), ..*self }
    }

    fn batch_range(&self, b: usize) -> std::ops::Range<u64> {
        let lo = b * self.n_paths / self.n_batches;
        let hi = (b + 1) * self.n_paths / self.n_batches;
        lo as u64..hi as u64
    }

    pub fn path(&self, stream: u64) -> BrownianPath {
        sample_path(self.grid, self.d, stream, self.seed)
    }

    /// Per-batch sums of the vector-valued sample `f`, plus sample counts.
    /// Batches run in parallel; results come back in batch order.
    pub fn batch_sums<F>(&self, width: usize, f: F) -> Result<Vec<(Vec<Complex64>, usize)>>
    where
        F: Fn(&BrownianPath) -> Result<Vec<Complex64>> + Sync,
    {
        self.batch_sums_with_stream(width, |_, p| f(p))
    }

    /// As [`Ensemble::batch_sums`], also passing the stream id of each base path.
    pub fn batch_sums_with_stream<F>(&self, width: usize, f: F) -> Result<Vec<(Vec<Complex64>, usize)>>
    where
        F: Fn(u64, &BrownianPath) -> Result<Vec<Complex64>> + Sync,
    {
        (0..self.n_batches)
            .into_par_iter()
            .map(|b| {
                let mut acc = vec![Complex64::new(0.0, 0.0); width];
                let range = self.batch_range(b);
                let count = (range.end - range.start) as usize;
                for s in range {
                    let p = self.path(s);
                    let v = f(s, &p)?;
                    if self.antithetic {
                        let w = f(s, &p.antithetic())?;
                        for i in 0..width {
                            acc[i] += (v[i] + w[i]) * 0.5;
                        }
                    } else {
                        for i in 0..width {
                            acc[i] += v[i];
                        }
                    }
                }
                Ok((acc, count))
            })
            .collect()
    }

    pub fn describe(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("ensemble serializes")
    }
}

/// Monte Carlo estimate with its batch-means standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub mean: Complex64,
    pub stderr: f64,
    pub n_samples: usize,
    pub n_batches: usize,
    pub antithetic: bool,
    pub metadata: serde_json::Value,
}

impl EstimateResult {
    /// `|mean − reference| / stderr` (infinite if the error bar is zero and
    /// the values differ).
    pub fn sigma_deviation(&self, reference: Complex64) -> f64 {
        let diff = (self.mean - reference).norm();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.stderr
        }
    }
}

/// Standard error of the mean of equally weighted batch values.
fn spread(values: &[Complex64], center: Complex64) -> f64 {
    let b = values.len() as f64;
    let ss: f64 = values.iter().map(|v| (v - center).norm_sqr()).sum();
    (ss / (b * (b - 1.0))).sqrt()
}

/// Plain mean of component `i` of the batch sums.
pub(crate) fn mean_estimate(sums: &[(Vec<Complex64>, usize)], i: usize, ens: &Ensemble, metadata: serde_json::Value) -> EstimateResult {
    let total: Complex64 = sums.iter().map(|(s, _)| s[i]).sum();
    let n: usize = sums.iter().map(|(_, c)| c).sum();
    let mean = total / n as f64;
    let batch_means: Vec<Complex64> = sums.iter().map(|(s, c)| s[i] / *c as f64).collect();
    EstimateResult {
        mean,
        stderr: spread(&batch_means, mean),
        n_samples: n,
        n_batches: sums.len(),
        antithetic: ens.antithetic,
        metadata,
    }
}

/// Self-normalized ratio `Σ num / Σ den`, error from the batch ratios.
pub(crate) fn ratio_estimate(
    sums: &[(Vec<Complex64>, usize)],
    num: usize,
    den: usize,
    ens: &Ensemble,
    metadata: serde_json::Value,
) -> Result<EstimateResult> {
    let n: usize = sums.iter().map(|(_, c)| c).sum();
    let (top, bottom): (Vec<Complex64>, Vec<Complex64>) = sums.iter().map(|(s, _)| (s[num], s[den])).unzip();
    let mean = ratio_of_sums(&top, &bottom)?;
    let ratios: Vec<Complex64> = top.iter().zip(&bottom).map(|(a, b)| a / b).collect();
    Ok(EstimateResult {
        mean,
        stderr: spread(&ratios, mean),
        n_samples: n,
        n_batches: sums.len(),
        antithetic: ens.antithetic,
        metadata,
    })
}

/// `Σ num / Σ den`, failing statistically if the denominator is not
/// positive.
pub fn ratio_of_sums(num: &[Complex64], den: &[Complex64]) -> Result<Complex64> {
    let top: Complex64 = num.iter().sum();
    let bottom: Complex64 = den.iter().sum();
    if !(bottom.re > 0.0) {
        return Err(Error::Statistical(format!(
            "normalization estimate {bottom} is not positive; increase the number of paths"
        )));
    }
    Ok(top / bottom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_is_scale_invariant() {
        let num: Vec<Complex64> = (0..40).map(|i| Complex64::new((i as f64).sin(), 0.1 * i as f64)).collect();
        let den: Vec<Complex64> = (0..40).map(|i| Complex64::new(1.0 + (i as f64).cos().abs(), 0.0)).collect();
        let r = ratio_of_sums(&num, &den).unwrap();
        // Powers of two rescale exactly.
        for c in [0.25, 8.0, 1024.0] {
            let n2: Vec<_> = num.iter().map(|z| z * c).collect();
            let d2: Vec<_> = den.iter().map(|z| z * c).collect();
            assert_eq!(ratio_of_sums(&n2, &d2).unwrap(), r);
        }
        let n3: Vec<_> = num.iter().map(|z| z * 3.7).collect();
        let d3: Vec<_> = den.iter().map(|z| z * 3.7).collect();
        assert!((ratio_of_sums(&n3, &d3).unwrap() - r).norm() < 1e-14);
        let neg: Vec<_> = den.iter().map(|z| -z).collect();
        assert!(ratio_of_sums(&num, &neg).unwrap_err().is_statistical());
    }

    #[test]
    fn batch_layout_covers_every_stream_once() {
        let g = PathGrid::new(1.0, 4).unwrap();
        let e = Ensemble::with_batches(g, 3, 1003, 1, false, 32).unwrap();
        let mut seen = 0;
        for b in 0..32 {
            let r = e.batch_range(b);
            assert!(r.end > r.start);
            seen += r.end - r.start;
        }
        assert_eq!(seen, 1003);
        assert!(Ensemble::with_batches(g, 3, 10, 1, false, 32).is_err());
        assert!(Ensemble::with_batches(g, 3, 100, 1, false, 8).is_err());
    }
}
