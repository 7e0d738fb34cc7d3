use nalgebra::DMatrix;
use num_complex::Complex64;

/// Real sparse matrix stored by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseOp {
    /// Duplicate `(row, col)` entries are summed.
    pub fn from_triplets(dim: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for (r, c, v) in trip {
            let row = &mut rows[r];
            match row.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => row.push((c, v)),
            }
        }
        SparseOp { dim, rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        self.rows.iter().enumerate().flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v))).collect()
    }

    pub fn transpose(&self) -> Self {
        SparseOp::from_triplets(self.dim, self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect())
    }

    pub fn scaled(&self, s: f64) -> Self {
        SparseOp { dim: self.dim, rows: self.rows.iter().map(|row| row.iter().map(|&(c, v)| (c, s * v)).collect()).collect() }
    }

    /// `self + diag(d)`.
    pub fn with_diagonal(&self, d: &[f64]) -> Self {
        let mut trip = self.triplets();
        trip.extend(d.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, &v)| (i, i, v)));
        SparseOp::from_triplets(self.dim, trip)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// `self · other` as a dense matrix.
    pub fn product_dense(&self, other: &SparseOp) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            for &(k, v) in row {
                for &(c, u) in &other.rows[k] {
                    m[(r, c)] += v * u;
                }
            }
        }
        m
    }

    /// `out += scale · self²`.
    pub fn accumulate_square(&self, scale: f64, out: &mut DMatrix<f64>) {
        for (r, row) in self.rows.iter().enumerate() {
            for &(k, v) in row {
                for &(c, u) in &self.rows[k] {
                    out[(r, c)] += scale * (v * u);
                }
            }
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|&(c, a)| a * v[c]).sum()).collect()
    }

    /// `out += coef · self · v`.
    pub fn add_apply(&self, coef: Complex64, v: &[Complex64], out: &mut [Complex64]) {
        for (r, row) in self.rows.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(c, a) in row {
                acc += v[c] * a;
            }
            out[r] += coef * acc;
        }
    }

    /// `out += coef · selfᵀ · v`.
    pub fn add_apply_transpose(&self, coef: Complex64, v: &[Complex64], out: &mut [Complex64]) {
        for (r, row) in self.rows.iter().enumerate() {
            let x = coef * v[r];
            for &(c, a) in row {
                out[c] += x * a;
            }
        }
    }
}
