//! Dense complex eigensolver: Householder reduction to Hessenberg form,
//! single-shift complex QR to Schur form, then back-substitution.

use num_complex::Complex64;

use super::matrix::{householder, CMatrix};
use crate::error::{Error, Result};

/// Eigenpairs; column `j` of `vectors` belongs to `values[j]`.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub values: Vec<Complex64>,
    pub vectors: CMatrix,
}

impl EigResult {
    pub fn vector(&self, j: usize) -> Vec<Complex64> {
        self.vectors.column(j)
    }
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Eigen-decomposition of a general complex square matrix.
pub fn eig_dense(a: &CMatrix) -> Result<EigResult> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !a.all_finite() {
        return Err(Error::NonFinite);
    }
    let n = a.rows();
    if n == 0 {
        return Ok(EigResult {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let (mut h, mut z) = hessenberg(a);
    schur(&mut h, &mut z)?;
    let values: Vec<Complex64> = (0..n).map(|i| h[(i, i)]).collect();
    let vectors = triangular_vectors(&h, &z);
    Ok(EigResult { values, vectors })
}

fn hessenberg(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let Some(v) = householder(&x) else { continue };
        // H <- P H P with P = I - 2 v v^H acting on indices k+1..n
        for j in 0..n {
            let mut s = ZERO;
            for (t, vi) in v.iter().enumerate() {
                s += vi.conj() * h[(k + 1 + t, j)];
            }
            let s = s * 2.0;
            for (t, vi) in v.iter().enumerate() {
                h[(k + 1 + t, j)] -= vi * s;
            }
        }
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let mut s = ZERO;
                for (t, vi) in v.iter().enumerate() {
                    s += m[(i, k + 1 + t)] * vi;
                }
                let s = s * 2.0;
                for (t, vi) in v.iter().enumerate() {
                    m[(i, k + 1 + t)] -= s * vi.conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

/// Givens pair `(c, s)` with `[c s; -conj(s) c] [a; b] = [r; 0]`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let (na, nb) = (a.norm(), b.norm());
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let r = na.hypot(nb);
    (na / r, (a / na) * b.conj() / r)
}

fn schur(h: &mut CMatrix, z: &mut CMatrix) -> Result<()> {
    let n = h.rows();
    let norm = h.frobenius().max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let cap = 60 * n.max(4);
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let s = if s == 0.0 { norm } else { s };
            if h[(lo, lo - 1)].norm() <= eps * s {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if iter > cap || total > 100 * n.max(4) * n.max(4) {
            return Err(Error::EigNotConverged {
                index: hi,
                norm,
                subdiag: h[(hi, hi - 1)].norm(),
            });
        }
        let shift = if iter.is_multiple_of(11) {
            // exceptional shift to break cycles
            h[(hi, hi)] + Complex64::new(0.75, 0.31) * h[(hi, hi - 1)].norm()
        } else {
            wilkinson(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        for i in lo..=hi {
            h[(i, i)] -= shift;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..n {
                let (x, y) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            h[(k + 1, k)] = ZERO;
            rots.push((c, s));
        }
        for (t, &(c, s)) in rots.iter().enumerate() {
            let k = lo + t;
            let top = (k + 2).min(hi);
            for i in 0..=top {
                let (x, y) = (h[(i, k)], h[(i, k + 1)]);
                h[(i, k)] = x * c + y * s.conj();
                h[(i, k + 1)] = -s * x + y * c;
            }
            for i in 0..n {
                let (x, y) = (z[(i, k)], z[(i, k + 1)]);
                z[(i, k)] = x * c + y * s.conj();
                z[(i, k + 1)] = -s * x + y * c;
            }
        }
        for i in lo..=hi {
            h[(i, i)] += shift;
        }
    }
    Ok(())
}

fn wilkinson(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let tr_half = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powu(2) + b * c;
    let root = disc.sqrt();
    let l1 = tr_half + root;
    let l2 = tr_half - root;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Eigenvectors of the upper-triangular `t`, mapped back through `z`.
fn triangular_vectors(t: &CMatrix, z: &CMatrix) -> CMatrix {
    let n = t.rows();
    let tnorm = t.frobenius().max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;
    let mut out = CMatrix::zeros(n, n);
    for k in 0..n {
        let lam = t[(k, k)];
        let mut x = vec![ZERO; n];
        x[k] = ONE;
        for i in (0..k).rev() {
            let mut s = ZERO;
            for j in i + 1..=k {
                s += t[(i, j)] * x[j];
            }
            let mut d = t[(i, i)] - lam;
            if d.norm() < small {
                d = Complex64::new(small, 0.0);
            }
            x[i] = -s / d;
            let big = x[i].norm();
            if big > 1e100 {
                for v in x.iter_mut() {
                    *v /= big;
                }
            }
        }
        let mut v = z.matvec(&x);
        normalize_largest(&mut v);
        out.set_column(k, &v);
    }
    out
}

/// Rescales so the largest-magnitude component equals exactly 1.
pub(crate) fn normalize_largest(v: &mut [Complex64]) {
    let Some((_, &p)) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
    else {
        return;
    };
    if p.norm() == 0.0 {
        return;
    }
    for x in v.iter_mut() {
        *x /= p;
    }
}
