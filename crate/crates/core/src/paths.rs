//! Discretized Brownian paths with reproducible substreams.
//!
//! Every path is identified by `(seed, stream_id)`. The generator is ChaCha8
//! keyed by the seed with the stream id selecting an independent keystream,
//! so a path never depends on which worker produced it or in which order.

use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::io::{BufRead, Write};

/// Uniform time grid `s_i = i · t_end / n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGrid {
    t_end: f64,
    n_steps: usize,
}

impl PathGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::domain("a path grid needs at least one step"));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::domain(format!("path horizon must be positive, got {t_end}")));
        }
        Ok(PathGrid { t_end, n_steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.t_end / self.n_steps as f64
    }

    /// Grid index of time `t`, which must coincide with a grid point.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let u = t / self.t_end * self.n_steps as f64;
        let i = u.round();
        if !(i >= 0.0 && i <= self.n_steps as f64) || (u - i).abs() > 1e-9 * i.max(1.0) {
            return Err(Error::domain(format!(
                "time {t} is not a grid point of [0, {}] with {} steps",
                self.t_end, self.n_steps
            )));
        }
        Ok(i as usize)
    }

    /// Grid with twice the steps over the same horizon.
    pub fn refined(&self) -> PathGrid {
        PathGrid { t_end: self.t_end, n_steps: 2 * self.n_steps }
    }
}

/// Generator for `(seed, stream, lane)`; lane 0 draws base paths, lane `L`
/// the Brownian-bridge midpoints of refinement level `L`.
fn stream_rng(seed: u64, stream_id: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ lane.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(stream_id);
    rng
}

/// A `d`-dimensional Brownian path stored as increments, step-major:
/// `increments[i*d + μ] = Δb_μ(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    grid: PathGrid,
    d: usize,
    increments: Vec<f64>,
}

impl BrownianPath {
    pub fn from_increments(grid: PathGrid, d: usize, increments: Vec<f64>) -> Result<Self> {
        if increments.len() != grid.n_steps * d {
            return Err(Error::domain(format!(
                "expected {} increments, got {}",
                grid.n_steps * d,
                increments.len()
            )));
        }
        Ok(BrownianPath { grid, d, increments })
    }

    pub fn grid(&self) -> PathGrid {
        self.grid
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn increment(&self, i: usize) -> &[f64] {
        &self.increments[i * self.d..(i + 1) * self.d]
    }

    /// `b(s_0), …, b(s_n)` as prefix sums, `b(0) = 0`, laid out step-major.
    pub fn positions(&self) -> Vec<f64> {
        let d = self.d;
        let mut pos = vec![0.0; (self.grid.n_steps + 1) * d];
        for i in 0..self.grid.n_steps {
            for mu in 0..d {
                pos[(i + 1) * d + mu] = pos[i * d + mu] + self.increments[i * d + mu];
            }
        }
        pos
    }

    /// `b(s_i)`.
    pub fn position(&self, i: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.d];
        for j in 0..i {
            for mu in 0..self.d {
                b[mu] += self.increments[j * self.d + mu];
            }
        }
        b
    }

    /// The reflected path `−b`.
    pub fn antithetic(&self) -> BrownianPath {
        BrownianPath { grid: self.grid, d: self.d, increments: self.increments.iter().map(|x| -x).collect() }
    }

    /// Doubles the resolution by inserting Brownian-bridge midpoints. The
    /// midpoint noise is drawn from lane `level` of the same `(seed, stream)`
    /// so refinements of one path are coupled and reproducible.
    pub fn refine(&self, seed: u64, stream_id: u64, level: u64) -> BrownianPath {
        let mut rng = stream_rng(seed, stream_id, level.max(1));
        let sd = (self.grid.dt() / 4.0).sqrt();
        let d = self.d;
        let mut inc = Vec::with_capacity(2 * self.increments.len());
        for i in 0..self.grid.n_steps {
            let z: Vec<f64> = (0..d).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
            for mu in 0..d {
                inc.push(0.5 * self.increments[i * d + mu] + z[mu]);
            }
            for mu in 0..d {
                inc.push(0.5 * self.increments[i * d + mu] - z[mu]);
            }
        }
        BrownianPath { grid: self.grid.refined(), d, increments: inc }
    }

    /// Plain-text dump: a header line, then one row of `d` increments per step.
    pub fn write_dump(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "# t_end={:.17e} n_steps={} d={}", self.grid.t_end, self.grid.n_steps, self.d)?;
        for i in 0..self.grid.n_steps {
            let row: Vec<String> = self.increment(i).iter().map(|x| format!("{x:.17e}")).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn read_dump(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::domain("empty path dump"))??;
        let mut t_end = None;
        let mut n_steps = None;
        let mut d = None;
        for field in header.trim_start_matches('#').split_whitespace() {
            match field.split_once('=') {
                Some(("t_end", v)) => t_end = v.parse::<f64>().ok(),
                Some(("n_steps", v)) => n_steps = v.parse::<usize>().ok(),
                Some(("d", v)) => d = v.parse::<usize>().ok(),
                _ => {}
            }
        }
        let (t_end, n_steps, d) = match (t_end, n_steps, d) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(Error::domain("path dump header needs t_end, n_steps and d")),
        };
        let mut inc = Vec::with_capacity(n_steps * d);
        for line in lines {
            let line = line?;
            for tok in line.split_whitespace() {
                inc.push(tok.parse::<f64>().map_err(|e| Error::domain(format!("bad increment {tok}: {e}")))?);
            }
        }
        BrownianPath::from_increments(PathGrid::new(t_end, n_steps)?, d, inc)
    }
}

/// Draws the path `(seed, stream_id)`: i.i.d. `N(0, Δs)` increments.
pub fn sample_path(grid: PathGrid, d: usize, stream_id: u64, seed: u64) -> BrownianPath {
    let mut rng = stream_rng(seed, stream_id, 0);
    let sd = grid.dt().sqrt();
    let increments = (0..grid.n_steps * d).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
    BrownianPath { grid, d, increments }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinism_and_independence() {
        let g = PathGrid::new(1.0, 16).unwrap();
        let a = sample_path(g, 3, 7, 42);
        let b = sample_path(g, 3, 7, 42);
        assert_eq!(a.increments(), b.increments());
        let c = sample_path(g, 3, 8, 42);
        assert_ne!(a.increments(), c.increments());
        let e = sample_path(g, 3, 7, 43);
        assert_ne!(a.increments(), e.increments());
    }

    #[test]
    fn single_step_variance() {
        let g = PathGrid::new(2.5, 1).unwrap();
        let n = 20000;
        let mean_sq: f64 = (0..n).map(|s| sample_path(g, 1, s, 1).increments()[0].powi(2)).sum::<f64>() / n as f64;
        // variance 2.5 with relative sd √(2/n)
        assert!((mean_sq - 2.5).abs() < 4.0 * 2.5 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn positions_are_prefix_sums() {
        let g = PathGrid::new(1.0, 5).unwrap();
        let p = sample_path(g, 2, 0, 9);
        let pos = p.positions();
        assert_eq!(&pos[..2], &[0.0, 0.0]);
        assert_eq!(p.position(5), pos[10..12].to_vec());
        assert_eq!(p.antithetic().antithetic(), p);
    }

    #[test]
    fn grid_alignment() {
        let g = PathGrid::new(2.0, 256).unwrap();
        assert_eq!(g.index_of(1.0).unwrap(), 128);
        assert_eq!(g.index_of(0.0).unwrap(), 0);
        assert!(g.index_of(1.0 + 1e-3).is_err());
        assert!(g.index_of(2.5).is_err());
        assert!(PathGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn refinement_keeps_coarse_points() {
        let g = PathGrid::new(1.0, 8).unwrap();
        let p = sample_path(g, 3, 3, 5);
        let r = p.refine(5, 3, 1);
        assert_eq!(r.grid().n_steps(), 16);
        let (pc, pf) = (p.positions(), r.positions());
        for i in 0..=8 {
            for mu in 0..3 {
                assert!((pc[i * 3 + mu] - pf[2 * i * 3 + mu]).abs() < 1e-14);
            }
        }
        assert_eq!(r, p.refine(5, 3, 1));
    }

    #[test]
    fn dump_roundtrip() {
        let g = PathGrid::new(0.75, 4).unwrap();
        let p = sample_path(g, 3, 1, 2);
        let mut buf = Vec::new();
        p.write_dump(&mut buf).unwrap();
        let back = BrownianPath::read_dump(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, p);
    }
}
