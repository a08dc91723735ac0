//! Small dense complex matrices and a Jacobi eigensolver for Hermitian blocks.
//!
//! Every matrix in this crate is at most 256×256, so a plain row-major
//! `Vec<Complex64>` is all that is needed.

use num_complex::Complex64;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (k, &v) in diag.iter().enumerate() {
            m[(k, k)] = C64::new(v, 0.0);
        }
        m
    }

    /// Builds a matrix from nested rows; panics on ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        CMatrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Side length; only meaningful for square matrices.
    pub fn dim(&self) -> usize {
        debug_assert_eq!(self.rows, self.cols);
        self.rows
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length");
        CMatrix { rows, cols, data }
    }

    pub fn transpose(&self) -> Self {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `U · self · U†`
    pub fn conjugate_by(&self, u: &CMatrix) -> CMatrix {
        u.matmul(self).matmul(&u.adjoint())
    }

    pub fn kron(&self, rhs: &CMatrix) -> CMatrix {
        let rows = self.rows * rhs.rows;
        let cols = self.cols * rhs.cols;
        Self::from_fn(rows, cols, |r, c| {
            self[(r / rhs.rows, c / rhs.cols)] * rhs[(r % rhs.rows, c % rhs.cols)]
        })
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|k| self[(k, k)]).sum()
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|k| self[(k, k)]).collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Frobenius inner product `Tr(self† · other)`.
    pub fn inner(&self, other: &CMatrix) -> C64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// Extracts the principal submatrix on `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> CMatrix {
        Self::from_fn(idx.len(), idx.len(), |r, c| self[(idx[r], idx[c])])
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the unitary whose columns are
/// the matching eigenvectors.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.dim();
    let mut a = h.clone();
    let mut v = CMatrix::identity(n);
    let scale = h.frobenius().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let b = a[(p, q)];
                let babs = b.norm();
                if babs <= 1e-300 {
                    continue;
                }
                // Phase-rotate the (p, q) entry onto the real axis, then do
                // an ordinary real symmetric rotation.
                let phase = b / babs;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let t = 0.5 * (2.0 * babs).atan2(app - aqq);
                let (s, c) = t.sin_cos();
                // Columns of the 2×2 rotation W:
                //   w_p = (c, s·conj(phase)),  w_q = (-s, c·conj(phase))
                let wpp = C64::new(c, 0.0);
                let wqp = phase.conj() * s;
                let wpq = C64::new(-s, 0.0);
                let wqq = phase.conj() * c;

                // A <- A W (columns p, q)
                for r in 0..n {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = arp * wpp + arq * wqp;
                    a[(r, q)] = arp * wpq + arq * wqq;
                }
                // A <- W† A (rows p, q)
                for col in 0..n {
                    let apc = a[(p, col)];
                    let aqc = a[(q, col)];
                    a[(p, col)] = wpp.conj() * apc + wqp.conj() * aqc;
                    a[(q, col)] = wpq.conj() * apc + wqq.conj() * aqc;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = vrp * wpp + vrq * wqp;
                    v[(r, q)] = vrp * wpq + vrq * wqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Solves the least-squares problem `min ‖A x − b‖` through the normal
/// equations with a small Tikhonov term. Returns `x` and the numerical rank
/// deficiency (count of pivots below `rcond` relative to the largest).
pub fn least_squares(a: &CMatrix, b: &[C64], rcond: f64) -> (Vec<C64>, usize) {
    let ah = a.adjoint();
    let normal = ah.matmul(a);
    let rhs: Vec<C64> = (0..ah.rows())
        .map(|r| (0..ah.cols()).map(|c| ah[(r, c)] * b[c]).sum())
        .collect();
    solve_hermitian_psd(&normal, &rhs, rcond)
}

/// Pseudo-inverse solve of a Hermitian positive semidefinite system via its
/// eigen-decomposition; eigenvalues below `rcond · λ_max` are dropped.
pub fn solve_hermitian_psd(m: &CMatrix, rhs: &[C64], rcond: f64) -> (Vec<C64>, usize) {
    let n = m.dim();
    let (vals, vecs) = hermitian_eigen(m);
    let lmax = vals.iter().cloned().fold(0.0, f64::max);
    let mut x = vec![ZERO; n];
    let mut dropped = 0;
    for k in 0..n {
        if vals[k] <= rcond * lmax || lmax == 0.0 {
            dropped += 1;
            continue;
        }
        let proj: C64 = (0..n).map(|r| vecs[(r, k)].conj() * rhs[r]).sum();
        let coef = proj / vals[k];
        for r in 0..n {
            x[r] += vecs[(r, k)] * coef;
        }
    }
    (x, dropped)
}

/// Moore–Penrose pseudo-inverse `(A†A)⁺ A†` for repeated least-squares
/// solves against one design matrix. Also returns the rank deficiency.
pub fn pseudo_inverse(a: &CMatrix, rcond: f64) -> (CMatrix, usize) {
    let ah = a.adjoint();
    let normal = ah.matmul(a);
    let n = normal.dim();
    let (vals, vecs) = hermitian_eigen(&normal);
    let lmax = vals.iter().cloned().fold(0.0, f64::max);
    let mut inv = CMatrix::zeros(n, n);
    let mut dropped = 0;
    for k in 0..n {
        if lmax == 0.0 || vals[k] <= rcond * lmax {
            dropped += 1;
            continue;
        }
        for r in 0..n {
            let vr = vecs[(r, k)] / vals[k];
            for c in 0..n {
                inv[(r, c)] += vr * vecs[(c, k)].conj();
            }
        }
    }
    (inv.matmul(&ah), dropped)
}

/// Pairwise (cascade) summation of matrices; result is independent of
/// thread scheduling when callers supply a fixed order.
pub fn pairwise_sum(mats: &[CMatrix]) -> Option<CMatrix> {
    match mats.len() {
        0 => None,
        1 => Some(mats[0].clone()),
        n => {
            let (l, r) = mats.split_at(n / 2);
            Some(&pairwise_sum(l)? + &pairwise_sum(r)?)
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        // xorshift; keeps this module free of dev-dependency coupling
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        let mut m = CMatrix::zeros(n, n);
        for r in 0..n {
            m[(r, r)] = C64::new(next() * 5.0, 0.0);
            for c in r + 1..n {
                let z = C64::new(next(), next());
                m[(r, c)] = z;
                m[(c, r)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn jacobi_residual_and_unitarity() {
        for (n, seed) in [(1, 1), (2, 2), (3, 3), (6, 4), (20, 5), (70, 6)] {
            let h = random_hermitian(n, seed);
            let (w, v) = hermitian_eigen(&h);
            let vh = v.adjoint();
            assert!(vh.matmul(&v).max_abs_diff(&CMatrix::identity(n)) < 1e-12);
            let hv = h.matmul(&v);
            for k in 0..n {
                for r in 0..n {
                    assert!((hv[(r, k)] - v[(r, k)] * w[k]).norm() < 1e-10 * h.frobenius());
                }
            }
            assert!(w.windows(2).all(|p| p[0] <= p[1]));
        }
    }

    #[test]
    fn jacobi_two_by_two_closed_form() {
        let h = CMatrix::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)],
            vec![C64::new(0.0, -2.0), C64::new(-1.0, 0.0)],
        ]);
        let (w, _) = hermitian_eigen(&h);
        let r = 5f64.sqrt();
        assert!((w[0] + r).abs() < 1e-14 && (w[1] - r).abs() < 1e-14);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 1), 4);
        assert_eq!(binomial(6, 2), 15);
        assert_eq!(binomial(8, 3), 56);
        assert_eq!(binomial(8, 4), 70);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn least_squares_exact_system() {
        let a = CMatrix::from_rows(&[vec![ONE, ZERO], vec![ZERO, C64::new(2.0, 0.0)], vec![ONE, ONE]]);
        let b = [C64::new(1.0, 0.0), C64::new(4.0, 0.0), C64::new(3.0, 0.0)];
        let (x, dropped) = least_squares(&a, &b, 1e-12);
        assert_eq!(dropped, 0);
        assert!((x[0] - ONE).norm() < 1e-12 && (x[1] - C64::new(2.0, 0.0)).norm() < 1e-12);
    }
}
