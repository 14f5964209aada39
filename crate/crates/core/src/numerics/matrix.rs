use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_diag(d: &[Complex64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<Complex64>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, |x| x.len());
        Self::from_fn(r, c, |i, j| cols[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[Complex64]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data
            .iter()
            .all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in matmul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    /// Kronecker product with `self` as the slow (outer) index.
    pub fn kron(&self, other: &Self) -> Self {
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        Self::from_fn(r, c, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }

    /// Extracts the rows and columns listed.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// Solves `A x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let x = self.solve_many(&CMatrix::from_columns(&[b.to_vec()]))?;
        Ok(x.column(0))
    }

    /// Solves `A X = B` for a square `A`.
    pub fn solve_many(&self, b: &CMatrix) -> Result<CMatrix> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.clone();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm()))
                .unwrap();
            if a[(p, k)].norm() <= 1e-15 * scale {
                return Err(Error::Singular);
            }
            if p != k {
                a.swap_rows(p, k);
                x.swap_rows(p, k);
            }
            let piv = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / piv;
                if f.norm() == 0.0 {
                    continue;
                }
                for j in k..n {
                    let t = a[(k, j)];
                    a[(i, j)] -= f * t;
                }
                for j in 0..x.cols {
                    let t = x[(k, j)];
                    x[(i, j)] -= f * t;
                }
            }
        }
        for j in 0..x.cols {
            for i in (0..n).rev() {
                let mut s = x[(i, j)];
                for k in i + 1..n {
                    s -= a[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = s / a[(i, i)];
            }
        }
        Ok(x)
    }

    /// Determinant by LU with partial pivoting.
    pub fn determinant(&self) -> Complex64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm()))
                .unwrap();
            if a[(p, k)].norm() == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if p != k {
                a.swap_rows(p, k);
                det = -det;
            }
            let piv = a[(k, k)];
            det *= piv;
            for i in k + 1..n {
                let f = a[(i, k)] / piv;
                for j in k..n {
                    let t = a[(k, j)];
                    a[(i, j)] -= f * t;
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        self.solve_many(&CMatrix::identity(self.rows))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Least-squares solution of an overdetermined system via Householder QR.
    pub fn least_squares(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let (m, n) = (self.rows, self.cols);
        if m < n {
            return Err(Error::Singular);
        }
        let mut a = self.clone();
        let mut y = b.to_vec();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let col: Vec<Complex64> = (k..m).map(|i| a[(i, k)]).collect();
            if let Some(v) = householder(&col) {
                a.reflect_rows(&v, k, k);
                reflect_vec(&v, &mut y[k..]);
            }
            if a[(k, k)].norm() <= 1e-14 * scale {
                return Err(Error::Singular);
            }
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= a[(i, j)] * x[j];
            }
            x[i] = s / a[(i, i)];
        }
        Ok(x)
    }

    /// Applies `(I - 2 v v^H)` to rows `r0..` restricted to columns `c0..`.
    fn reflect_rows(&mut self, v: &[Complex64], r0: usize, c0: usize) {
        for j in c0..self.cols {
            let mut s = Complex64::new(0.0, 0.0);
            for (t, vi) in v.iter().enumerate() {
                s += vi.conj() * self[(r0 + t, j)];
            }
            let s = s * 2.0;
            for (t, vi) in v.iter().enumerate() {
                self[(r0 + t, j)] -= vi * s;
            }
        }
    }

    /// Numerical rank and a nullspace basis from QR with column pivoting.
    /// A diagonal entry of `R` counts toward the rank when it exceeds `rtol * |R_00|`.
    pub fn rank_nullspace(&self, rtol: f64) -> (usize, Vec<Vec<Complex64>>) {
        let (m, n) = (self.rows, self.cols);
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut norms: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|i| a[(i, j)].norm_sqr()).sum::<f64>())
            .collect();
        let steps = m.min(n);
        let mut rank = 0;
        let mut r00 = 0.0;
        for k in 0..steps {
            let p = (k..n)
                .max_by(|&i, &j| norms[i].total_cmp(&norms[j]))
                .unwrap();
            if p != k {
                for i in 0..m {
                    a.data.swap(i * n + p, i * n + k);
                }
                perm.swap(p, k);
                norms.swap(p, k);
            }
            let col: Vec<Complex64> = (k..m).map(|i| a[(i, k)]).collect();
            if let Some(v) = householder(&col) {
                a.reflect_rows(&v, k, k);
            }
            let d = a[(k, k)].norm();
            if k == 0 {
                r00 = d;
            }
            if d <= rtol * r00 || d == 0.0 {
                break;
            }
            rank += 1;
            for j in k + 1..n {
                norms[j] = (k + 1..m).map(|i| a[(i, j)].norm_sqr()).sum();
            }
        }
        let mut basis = Vec::new();
        for free in rank..n {
            // Solve R11 x = -R12[:, free].
            let mut x = vec![Complex64::new(0.0, 0.0); rank];
            for i in (0..rank).rev() {
                let mut s = -a[(i, free)];
                for j in i + 1..rank {
                    s -= a[(i, j)] * x[j];
                }
                x[i] = s / a[(i, i)];
            }
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..rank {
                v[perm[i]] = x[i];
            }
            v[perm[free]] = Complex64::new(1.0, 0.0);
            basis.push(v);
        }
        (rank, basis)
    }

    /// Orthonormal basis for the column span (modified Gram-Schmidt, two passes).
    pub fn orthonormal_columns(&self, rtol: f64) -> Vec<Vec<Complex64>> {
        let mut out: Vec<Vec<Complex64>> = Vec::new();
        let scale = (0..self.cols)
            .map(|j| super::vec_norm(&self.column(j)))
            .fold(0.0, f64::max);
        for j in 0..self.cols {
            let mut v = self.column(j);
            for _ in 0..2 {
                for u in &out {
                    let p = super::inner(u, &v);
                    for (vi, ui) in v.iter_mut().zip(u) {
                        *vi -= p * ui;
                    }
                }
            }
            let nv = super::vec_norm(&v);
            if nv > rtol * scale && nv > 0.0 {
                out.push(v.iter().map(|x| x / nv).collect());
            }
        }
        out
    }
}

/// Largest distance from a unit vector of span(b) to span(a); 0 means span(b) is inside span(a).
pub fn subspace_gap(a: &CMatrix, b: &CMatrix) -> f64 {
    let qa = a.orthonormal_columns(1e-12);
    let qb = b.orthonormal_columns(1e-12);
    let mut worst: f64 = 0.0;
    for v in &qb {
        let mut r = v.clone();
        for u in &qa {
            let p = super::inner(u, &r);
            for (ri, ui) in r.iter_mut().zip(u) {
                *ri -= p * ui;
            }
        }
        worst = worst.max(super::vec_norm(&r));
    }
    worst
}

/// Householder vector `v` (unit norm) with `(I - 2vv^H) x = alpha e_1`; `None` if `x` is zero.
pub(crate) fn householder(x: &[Complex64]) -> Option<Vec<Complex64>> {
    let nx = super::vec_norm(x);
    if nx == 0.0 {
        return None;
    }
    let x0 = x[0];
    let phase = if x0.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        x0 / x0.norm()
    };
    let alpha = -phase * nx;
    let mut v = x.to_vec();
    v[0] -= alpha;
    let nv = super::vec_norm(&v);
    if nv == 0.0 {
        return None;
    }
    for vi in v.iter_mut() {
        *vi /= nv;
    }
    Some(v)
}

pub(crate) fn reflect_vec(v: &[Complex64], y: &mut [Complex64]) {
    let s: Complex64 = v
        .iter()
        .zip(y.iter())
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>()
        * 2.0;
    for (yi, vi) in y.iter_mut().zip(v) {
        *yi -= vi * s;
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
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
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c64;

    #[test]
    fn solve_recovers_known_vector() {
        let a = CMatrix::from_rows(&[
            vec![c64(2.0, 1.0), c64(0.5, 0.0), c64(0.0, -1.0)],
            vec![c64(1.0, 0.0), c64(3.0, 0.0), c64(1.0, 1.0)],
            vec![c64(0.0, 2.0), c64(-1.0, 0.0), c64(4.0, 0.0)],
        ]);
        let x = vec![c64(1.0, -1.0), c64(0.0, 2.0), c64(-3.0, 0.5)];
        let b = a.matvec(&x);
        let y = a.solve(&b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-13);
        }
    }

    #[test]
    fn singular_solve_is_reported() {
        let a = CMatrix::from_rows(&[
            vec![c64(1.0, 0.0), c64(2.0, 0.0)],
            vec![c64(2.0, 0.0), c64(4.0, 0.0)],
        ]);
        assert_eq!(
            a.solve(&[c64(1.0, 0.0), c64(0.0, 0.0)]),
            Err(Error::Singular)
        );
    }

    #[test]
    fn nullspace_of_rank_deficient_matrix() {
        // rank 2, 4 columns
        let a = CMatrix::from_rows(&[
            vec![c64(1.0, 0.0), c64(2.0, 0.0), c64(3.0, 0.0), c64(0.0, 1.0)],
            vec![c64(0.0, 1.0), c64(1.0, 0.0), c64(1.0, 1.0), c64(-1.0, 0.0)],
            vec![c64(1.0, 1.0), c64(3.0, 0.0), c64(4.0, 1.0), c64(-1.0, 1.0)],
        ]);
        let (rank, null) = a.rank_nullspace(1e-10);
        assert_eq!(rank, 2);
        assert_eq!(null.len(), 2);
        for v in &null {
            assert!(crate::numerics::vec_norm(&a.matvec(v)) < 1e-12 * crate::numerics::vec_norm(v));
        }
    }

    #[test]
    fn kron_matches_block_layout() {
        let a = CMatrix::from_rows(&[
            vec![c64(1.0, 0.0), c64(2.0, 0.0)],
            vec![c64(3.0, 0.0), c64(4.0, 0.0)],
        ]);
        let b = CMatrix::identity(2);
        let k = a.kron(&b);
        assert_eq!(k[(0, 2)], c64(2.0, 0.0));
        assert_eq!(k[(3, 1)], c64(3.0, 0.0));
        assert_eq!(k[(1, 2)], c64(0.0, 0.0));
    }

    #[test]
    fn least_squares_exact_system() {
        let a = CMatrix::from_fn(5, 3, |i, j| c64(i as f64 + 1.0, 0.3).powu(j as u32));
        let x = vec![c64(1.0, 0.0), c64(-2.0, 0.5), c64(0.25, 0.0)];
        let b = a.matvec(&x);
        let y = a.least_squares(&b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-11);
        }
    }
}
