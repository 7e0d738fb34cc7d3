//! One-dimensional quadrature: adaptive Gauss–Kronrod (21 points) and
//! Gauss–Legendre node generation.

use crate::{Error, Result};
use std::collections::BinaryHeap;
use std::cmp::Ordering;

// Kronrod abscissae; odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208067952710,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

/// Tolerances for [`integrate`]. Refinement stops once the error estimate is
/// below the looser of the two.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-10, rel: 1e-8, max_intervals: 4000 }
    }
}

/// Integral value with its error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// 21-point Kronrod rule on `[a, b]`, returning `(kronrod, |kronrod − gauss|)`.
/// `f` returns several integrands at once so they share function evaluations.
fn gk21<const K: usize>(f: &mut impl FnMut(f64) -> [f64; K], a: f64, b: f64) -> ([f64; K], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = [0.0; K];
    let mut g = [0.0; K];
    for q in 0..K {
        k[q] = fc[q] * WGK[10];
    }
    for i in 0..10 {
        let dx = h * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for q in 0..K {
            let s = f1[q] + f2[q];
            k[q] += WGK[i] * s;
            if i % 2 == 1 {
                g[q] += WG[i / 2] * s;
            }
        }
    }
    let mut err = 0.0f64;
    for q in 0..K {
        k[q] *= h;
        g[q] *= h;
        err = err.max((k[q] - g[q]).abs());
    }
    (k, err)
}

struct Piece<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    error: f64,
}

impl<const K: usize> PartialEq for Piece<K> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const K: usize> Eq for Piece<K> {}
impl<const K: usize> PartialOrd for Piece<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const K: usize> Ord for Piece<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Globally adaptive integration of `K` integrands over `[a, b]`; the piece
/// with the largest error is bisected until the summed error meets `tol` for
/// every component.
pub fn integrate_many<const K: usize>(
    mut f: impl FnMut(f64) -> [f64; K],
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<[Integral; K]> {
    if a == b {
        return Ok([Integral { value: 0.0, error: 0.0 }; K]);
    }
    let mut heap = BinaryHeap::new();
    let (v, e) = gk21(&mut f, a, b);
    heap.push(Piece { a, b, value: v, error: e });
    loop {
        let mut total = [0.0; K];
        let mut err = 0.0;
        for p in heap.iter() {
            for q in 0..K {
                total[q] += p.value[q];
            }
            err += p.error;
        }
        let scale = total.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if err <= tol.abs.max(tol.rel * scale) {
            let mut out = [Integral { value: 0.0, error: err }; K];
            // Sum in interval order so the result does not depend on heap layout.
            let mut pieces: Vec<_> = heap.into_vec();
            pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
            for q in 0..K {
                out[q].value = pieces.iter().map(|p| p.value[q]).sum();
            }
            return Ok(out);
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Numeric(format!(
                "quadrature on [{a}, {b}] did not converge: error {err:e} after {} pieces",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk21(&mut f, worst.a, mid);
        let (v2, e2) = gk21(&mut f, mid, worst.b);
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
    }
}

/// Adaptive integration of a single integrand.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    integrate_many(|x| [f(x)], a, b, tol).map(|r| r[0])
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
/// Node `i` and node `n−1−i` are exact negatives of each other.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_sum_to_two() {
        let s: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert!((s - 2.0).abs() < 1e-15);
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn kronrod_exact_for_polynomials() {
        for p in 0..=31 {
            let (v, _) = gk21(&mut |x: f64| [x.powi(p)], 0.0, 1.0);
            let want = 1.0 / (p as f64 + 1.0);
            assert!((v[0] - want).abs() < 1e-14, "degree {p}");
        }
        // The embedded Gauss rule is exact through degree 19.
        let (_, e) = gk21(&mut |x: f64| [x.powi(19)], 0.0, 1.0);
        assert!(e < 1e-14);
    }

    #[test]
    fn adaptive_handles_oscillation_and_peaks() {
        let r = integrate(|x| (50.0 * x).sin() * x, 0.0, 3.0, Tolerance::default()).unwrap();
        let want = ((150.0f64).sin() - 150.0 * (150.0f64).cos()) / 2500.0;
        assert!((r.value - want).abs() < 1e-10);
        let r = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, Tolerance::default()).unwrap();
        let want = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((r.value - want).abs() < 1e-8 * want);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1usize, 2, 5, 8, 17] {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p as i32)).sum();
                let want = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((s - want).abs() < 1e-13, "n={n} p={p}");
            }
            for i in 0..n {
                assert_eq!(x[i], -x[n - 1 - i]);
                assert_eq!(w[i], w[n - 1 - i]);
            }
        }
    }
}
