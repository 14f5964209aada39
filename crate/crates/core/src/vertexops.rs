//! Boltzmann weights, the nilpotent representation, L-operators, and the
//! transfer and auxiliary matrices as sector blocks.
//!
//! Both R and L act on `C^2 (quantum) x C^d (auxiliary)`. For fixed quantum
//! in/out spins every entry is an auxiliary operator that moves `v_n` to a
//! single `v_{n+s}`, so monodromy traces are computed by a depth-first sum over
//! spin paths, tracking only the accumulated shift and one coefficient per
//! starting auxiliary index.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{shift_state, ModelParams, MomentumBlock, Sector};
use crate::numerics::{CMatrix, CPoly};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Spectral parameter `mu` with an explicitly tracked square root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuParam {
    pub value: Complex64,
    pub sqrt: Complex64,
}

impl MuParam {
    /// Principal square root.
    pub fn new(value: Complex64) -> Self {
        Self {
            value,
            sqrt: value.sqrt(),
        }
    }

    pub fn real(x: f64) -> Self {
        Self::new(Complex64::new(x, 0.0))
    }

    /// `mu q^k`, continuing the root as `sqrt(mu) (q^{1/2})^k`.
    pub fn times_q(&self, k: i32, params: &ModelParams) -> Self {
        let h = params.q_half * params.shift_branch;
        Self {
            value: self.value * params.q.powi(k),
            sqrt: self.sqrt * h.powi(k),
        }
    }

    pub fn inv(&self) -> Self {
        Self {
            value: self.value.inv(),
            sqrt: self.sqrt.inv(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            value: self.value.conj(),
            sqrt: self.sqrt.conj(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            value: self.value * other.value,
            sqrt: self.sqrt * other.sqrt,
        }
    }
}

/// Six-vertex weights with `rho = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoltzmannWeights {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub c_prime: Complex64,
}

/// `a = 1, b = (1-z)q/(1-zq^2), c = (1-q^2)/(1-zq^2), c' = cz`.
pub fn boltzmann_weights(z: Complex64, q: Complex64) -> Result<BoltzmannWeights> {
    let den = ONE - z * q * q;
    if den.norm() <= 1e-14 {
        return Err(Error::WeightSingularity(z));
    }
    let c = (ONE - q * q) / den;
    Ok(BoltzmannWeights {
        a: ONE,
        b: (ONE - z) * q / den,
        c,
        c_prime: c * z,
    })
}

/// Weights multiplied by `1 - zq^2`; polynomial in `z` and never singular.
pub fn normalized_weights(z: Complex64, q: Complex64) -> BoltzmannWeights {
    BoltzmannWeights {
        a: ONE - z * q * q,
        b: (ONE - z) * q,
        c: ONE - q * q,
        c_prime: (ONE - q * q) * z,
    }
}

/// `b(z)` at the model's `q`.
pub fn weight_b(z: Complex64, q: Complex64) -> Complex64 {
    (ONE - z) * q / (ONE - z * q * q)
}

/// The `N'`-dimensional nilpotent representation.
#[derive(Debug, Clone, PartialEq)]
pub struct NilpotentRep {
    pub dim: usize,
    pub mu: MuParam,
    pub q: Complex64,
    /// Eigenvalues of `t`: `tau_n = mu^{-1/2} q^{-n-1/2}`.
    pub tau: Vec<Complex64>,
    /// `e v_n = e_coef[n] v_{n-1}`.
    pub e_coef: Vec<Complex64>,
}

pub fn build_rep(mu: MuParam, params: &ModelParams) -> NilpotentRep {
    let d = params.n_prime;
    let q = params.q;
    let qq = q - q.inv();
    let tau = (0..d)
        .map(|n| mu.sqrt.inv() * params.q_half.powi(-2 * n as i32 - 1))
        .collect();
    let e_coef = (0..d)
        .map(|n| {
            let q2n = q.powi(2 * n as i32);
            (mu.value + mu.value.inv() - mu.value * q2n - mu.value.inv() / q2n) / (qq * qq)
        })
        .collect();
    NilpotentRep {
        dim: d,
        mu,
        q,
        tau,
        e_coef,
    }
}

impl NilpotentRep {
    pub fn t(&self) -> CMatrix {
        CMatrix::from_diag(&self.tau)
    }

    pub fn t_inv(&self) -> CMatrix {
        CMatrix::from_diag(&self.tau.iter().map(|x| x.inv()).collect::<Vec<_>>())
    }

    pub fn e(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for n in 1..self.dim {
            m[(n - 1, n)] = self.e_coef[n];
        }
        m
    }

    pub fn f(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for n in 0..self.dim.saturating_sub(1) {
            m[(n + 1, n)] = ONE;
        }
        m
    }

    /// Residuals of the defining relations and centre values.
    pub fn relation_residuals(&self) -> RepResiduals {
        let q = self.q;
        let (t, ti, e, f) = (self.t(), self.t_inv(), self.e(), self.f());
        let d = self.dim;
        let id = CMatrix::identity(d);
        let rel = |a: &CMatrix, b: &CMatrix| {
            (a - b).frobenius() / a.frobenius().max(b.frobenius()).max(1e-300)
        };
        let t2 = t.matmul(&t);
        let ti2 = ti.matmul(&ti);
        let mut ep = id.clone();
        let mut fp = id.clone();
        for _ in 0..d {
            ep = ep.matmul(&e);
            fp = fp.matmul(&f);
        }
        let mut tp = id.clone();
        for _ in 0..d {
            tp = tp.matmul(&t2);
        }
        let qq = q - q.inv();
        let cas = &(&t2.scale(q) + &ti2.scale(q.inv())) + &f.matmul(&e).scale(qq * qq);
        let mu = self.mu.value;
        RepResiduals {
            t_e: rel(&t.matmul(&e).matmul(&ti), &e.scale(q)),
            t_f: rel(&t.matmul(&f).matmul(&ti), &f.scale(q.inv())),
            e_f: rel(&e.commutator(&f), &(&t2 - &ti2).scale(qq.inv())),
            e_nilpotent: ep.frobenius() / e.frobenius().powi(d as i32).max(1.0),
            f_nilpotent: fp.frobenius(),
            t_power: rel(&tp, &id.scale((mu * q).powi(-(d as i32)))),
            t_power_printed: rel(&tp, &id.scale(mu.powi(-(d as i32)))),
            casimir: rel(&cas, &id.scale(mu + mu.inv())),
        }
    }
}

/// Relative residuals of the quantum-group relations for one representation.
///
/// `t_power` compares `t^{2N'}` with `(q mu)^{-N'}`, the value implied by the
/// diagonal of `t^2`; `t_power_printed` compares with `mu^{-N'}`, which agrees
/// only for odd `N` (for even `N`, `q^{N'} = -1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepResiduals {
    pub t_e: f64,
    pub t_f: f64,
    pub e_f: f64,
    pub e_nilpotent: f64,
    pub f_nilpotent: f64,
    pub t_power: f64,
    pub t_power_printed: f64,
    pub casimir: f64,
}

impl RepResiduals {
    /// Worst residual among the asserted relations (excludes `t_power_printed`).
    pub fn max(&self) -> f64 {
        [
            self.t_e,
            self.t_f,
            self.e_f,
            self.e_nilpotent,
            self.f_nilpotent,
            self.t_power,
            self.casimir,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// The four `N' x N'` blocks of `L^mu(w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LOperator {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub d: CMatrix,
}

/// `A = wq t - t^{-1}`, `B = wq(q-q^{-1}) t f`, `C = (q-q^{-1}) e t^{-1}`, `D = wq t^{-1} - t`.
pub fn build_l(mu: MuParam, w: Complex64, params: &ModelParams) -> LOperator {
    let rep = build_rep(mu, params);
    l_from_rep(&rep, w)
}

pub fn l_from_rep(rep: &NilpotentRep, w: Complex64) -> LOperator {
    let q = rep.q;
    let (t, ti, e, f) = (rep.t(), rep.t_inv(), rep.e(), rep.f());
    let wq = w * q;
    LOperator {
        a: &t.scale(wq) - &ti,
        b: t.matmul(&f).scale(wq * (q - q.inv())),
        c: e.matmul(&ti).scale(q - q.inv()),
        d: &ti.scale(wq) - &t,
    }
}

impl LOperator {
    /// Full `2d x 2d` matrix, quantum index outer (0 = up).
    pub fn to_matrix(&self) -> CMatrix {
        let d = self.a.rows();
        CMatrix::from_fn(2 * d, 2 * d, |i, j| {
            let blk = match (i / d, j / d) {
                (0, 0) => &self.a,
                (0, 1) => &self.b,
                (1, 0) => &self.c,
                _ => &self.d,
            };
            blk[(i % d, j % d)]
        })
    }
}

/// Auxiliary operator moving `v_n` to `y[n] v_{n+shift}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftDiag {
    pub shift: i32,
    pub y: Vec<Complex64>,
}

/// Per-site operator: `entries[out][in]` for quantum spins (0 = up).
#[derive(Debug, Clone, PartialEq)]
pub struct SiteLax {
    pub dim: usize,
    pub entries: [[ShiftDiag; 2]; 2],
}

impl SiteLax {
    pub fn from_weights(w: &BoltzmannWeights) -> Self {
        SiteLax {
            dim: 2,
            entries: [
                [
                    ShiftDiag {
                        shift: 0,
                        y: vec![w.a, w.b],
                    },
                    ShiftDiag {
                        shift: 1,
                        y: vec![w.c_prime, ZERO],
                    },
                ],
                [
                    ShiftDiag {
                        shift: -1,
                        y: vec![ZERO, w.c],
                    },
                    ShiftDiag {
                        shift: 0,
                        y: vec![w.b, w.a],
                    },
                ],
            ],
        }
    }

    pub fn from_rep(rep: &NilpotentRep, w: Complex64) -> Self {
        let q = rep.q;
        let qq = q - q.inv();
        let d = rep.dim;
        let wq = w * q;
        let a = rep.tau.iter().map(|t| wq * t - t.inv()).collect();
        let dd = rep.tau.iter().map(|t| wq * t.inv() - t).collect();
        let b = (0..d)
            .map(|n| {
                if n + 1 < d {
                    wq * qq * rep.tau[n + 1]
                } else {
                    ZERO
                }
            })
            .collect();
        let c = (0..d)
            .map(|n| {
                if n > 0 {
                    qq * rep.e_coef[n] / rep.tau[n]
                } else {
                    ZERO
                }
            })
            .collect();
        SiteLax {
            dim: d,
            entries: [
                [ShiftDiag { shift: 0, y: a }, ShiftDiag { shift: 1, y: b }],
                [ShiftDiag { shift: -1, y: c }, ShiftDiag { shift: 0, y: dd }],
            ],
        }
    }

    /// Frobenius norm of the full site matrix; `norm^M` bounds the monodromy trace.
    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .flat_map(|e| e.y.iter())
            .map(|x| x.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Lax operator of `T(z)` at deformation `q` (optionally the normalized `T~`).
pub fn transfer_lax(z: Complex64, q: Complex64, normalized: bool) -> Result<SiteLax> {
    let w = if normalized {
        normalized_weights(z, q)
    } else {
        boltzmann_weights(z, q)?
    };
    Ok(SiteLax::from_weights(&w))
}

/// Lax operator of `Q_mu(z)`: `L^mu(z / mu)`.
pub fn q_lax(mu: MuParam, z: Complex64, params: &ModelParams) -> SiteLax {
    SiteLax::from_rep(&build_rep(mu, params), z / mu.value)
}

/// Adds `coef * tr(L_M ... L_1) |input>` into the full-space vector `out`.
pub fn trace_column(lax: &SiteLax, input: u32, m: usize, coef: Complex64, out: &mut [Complex64]) {
    let d = lax.dim;
    let mut stack: Vec<Vec<Complex64>> = vec![vec![ZERO; d]; m + 1];
    stack[0].iter_mut().for_each(|x| *x = ONE);
    dfs(lax, input, m, 0, 0, 0, &mut stack, coef, out);
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    lax: &SiteLax,
    input: u32,
    m: usize,
    site: usize,
    shift: i32,
    out_mask: u32,
    stack: &mut [Vec<Complex64>],
    coef: Complex64,
    out: &mut [Complex64],
) {
    let d = lax.dim as i32;
    if site == m {
        if shift == 0 {
            let tr: Complex64 = stack[m].iter().sum();
            out[out_mask as usize] += coef * tr;
        }
        return;
    }
    let bit_in = ((input >> site) & 1) as usize;
    let remaining = (m - site - 1) as i32;
    for bit_out in 0..2usize {
        let op = &lax.entries[bit_out][bit_in];
        let s2 = shift + op.shift;
        if s2.abs() >= d || s2.abs() > remaining {
            continue;
        }
        let (lo, hi) = stack.split_at_mut(site + 1);
        let (cur, next) = (&lo[site], &mut hi[0]);
        let mut any = false;
        for n in 0..d {
            let src = n + shift;
            let v = if (0..d).contains(&src) && (0..d).contains(&(src + op.shift)) {
                cur[n as usize] * op.y[src as usize]
            } else {
                ZERO
            };
            next[n as usize] = v;
            any |= v.re != 0.0 || v.im != 0.0;
        }
        if any {
            dfs(
                lax,
                input,
                m,
                site + 1,
                s2,
                out_mask | ((bit_out as u32) << site),
                stack,
                coef,
                out,
            );
        }
    }
}

/// Applies the monodromy trace to a full-space vector.
pub fn apply_full(lax: &SiteLax, v: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; v.len()];
    for (s, &x) in v.iter().enumerate() {
        if x.norm() > 0.0 {
            trace_column(lax, s as u32, m, x, &mut out);
        }
    }
    out
}

/// Matrix of the monodromy trace on an S^z sector.
pub fn sector_matrix(lax: &SiteLax, sector: &Sector) -> CMatrix {
    let m = sector.m;
    let mut mat = CMatrix::zeros(sector.dim(), sector.dim());
    let mut buf = vec![ZERO; 1 << m];
    for (col, &s) in sector.states.iter().enumerate() {
        buf.iter_mut().for_each(|x| *x = ZERO);
        trace_column(lax, s, m, ONE, &mut buf);
        for (row, &t) in sector.states.iter().enumerate() {
            mat[(row, col)] = buf[t as usize];
        }
    }
    mat
}

/// Matrix of a translation-invariant trace on a momentum block (orthonormal basis).
///
/// Uses `<u_r'| X |u_r> = M <v_r'| X |r> / (|v_r'| |v_r|)`, so only representative columns are traced.
pub fn block_matrix(lax: &SiteLax, block: &MomentumBlock) -> CMatrix {
    let m = block.m;
    let k = block.k();
    let dim = block.dim();
    let mut mat = CMatrix::zeros(dim, dim);
    let mut buf = vec![ZERO; 1 << m];
    for (col, &r) in block.reps.iter().enumerate() {
        buf.iter_mut().for_each(|x| *x = ZERO);
        trace_column(lax, r, m, ONE, &mut buf);
        for (row, &r2) in block.reps.iter().enumerate() {
            let mut s = r2;
            let mut acc = ZERO;
            for n in 1..=m {
                s = shift_state(s, m);
                acc += Complex64::from_polar(1.0, -k * n as f64) * buf[s as usize];
            }
            mat[(row, col)] = acc * (m as f64 / (block.norm(row) * block.norm(col)));
        }
    }
    mat
}

/// A dense operator on a sector or momentum block, with its spectral point.
#[derive(Debug, Clone)]
pub struct SectorBlock {
    pub two_sz: i32,
    /// Momentum index when restricted to a momentum block.
    pub j: Option<usize>,
    pub z: Complex64,
    pub mu: Option<Complex64>,
    pub matrix: CMatrix,
}

/// `T(z)` (or `T~(z) = (1 - zq^2)^M T(z)` when `normalized`) on a sector.
pub fn transfer_block(
    z: Complex64,
    sector: &Sector,
    params: &ModelParams,
    normalized: bool,
) -> Result<SectorBlock> {
    let lax = transfer_lax(z, params.q, normalized)?;
    Ok(SectorBlock {
        two_sz: sector.two_sz,
        j: None,
        z,
        mu: None,
        matrix: sector_matrix(&lax, sector),
    })
}

/// `Q_mu(z)` on a sector.
pub fn q_block(mu: MuParam, z: Complex64, sector: &Sector, params: &ModelParams) -> SectorBlock {
    SectorBlock {
        two_sz: sector.two_sz,
        j: None,
        z,
        mu: Some(mu.value),
        matrix: sector_matrix(&q_lax(mu, z, params), sector),
    }
}

/// Interpolation nodes `r e^{2 pi i k/(M+1)}`.
pub fn interpolation_nodes(m: usize, radius: f64) -> Vec<Complex64> {
    (0..=m)
        .map(|k| {
            Complex64::from_polar(
                radius,
                2.0 * std::f64::consts::PI * k as f64 / (m as f64 + 1.0),
            )
        })
        .collect()
}

/// Coefficient matrices `Q^(m)` with `Q_mu(z) = sum_m Q^(m) z^m`, by a discrete Fourier
/// transform over nodes on a circle of the given radius.
pub fn q_poly_coeffs(
    mu: MuParam,
    sector: &Sector,
    params: &ModelParams,
    radius: f64,
) -> Vec<CMatrix> {
    let m = params.m;
    let nodes = interpolation_nodes(m, radius);
    let samples: Vec<CMatrix> = nodes
        .iter()
        .map(|&z| q_block(mu, z, sector, params).matrix)
        .collect();
    coefficients_from_circle(&samples, radius)
}

/// Entrywise inverse DFT of samples taken at `interpolation_nodes(len-1, radius)`.
pub fn coefficients_from_circle(samples: &[CMatrix], radius: f64) -> Vec<CMatrix> {
    let p = samples.len();
    let (r, c) = (samples[0].rows(), samples[0].cols());
    (0..p)
        .map(|deg| {
            let mut acc = CMatrix::zeros(r, c);
            for (k, s) in samples.iter().enumerate() {
                let ph = Complex64::from_polar(
                    1.0,
                    -2.0 * std::f64::consts::PI * (k * deg) as f64 / p as f64,
                );
                acc = &acc + &s.scale(ph);
            }
            acc.scale(Complex64::new(
                1.0 / (p as f64 * radius.powi(deg as i32)),
                0.0,
            ))
        })
        .collect()
}

/// Evaluates `sum_m C_m z^m`.
pub fn eval_matrix_poly(coeffs: &[CMatrix], z: Complex64) -> CMatrix {
    let mut acc = CMatrix::zeros(coeffs[0].rows(), coeffs[0].cols());
    for c in coeffs.iter().rev() {
        acc = &acc.scale(z) + c;
    }
    acc
}

/// Closed form of the all-up eigenvalue of `Q_mu(z)`: `sum_n ((zq/mu) tau_n - tau_n^{-1})^M`.
pub fn all_up_q_eigenvalue(mu: MuParam, z: Complex64, params: &ModelParams) -> Complex64 {
    let rep = build_rep(mu, params);
    let w = z / mu.value;
    rep.tau
        .iter()
        .map(|t| (w * params.q * t - t.inv()).powi(params.m as i32))
        .sum()
}

/// The all-up eigenvalue as a polynomial in `z`.
pub fn all_up_q_poly(mu: MuParam, params: &ModelParams) -> CPoly {
    let rep = build_rep(mu, params);
    let mut acc = CPoly::zero();
    for t in &rep.tau {
        let lin = CPoly::new(vec![-t.inv(), params.q * t / mu.value]);
        acc = &acc + &lin.pow(params.m as u32);
    }
    acc
}

/// XXZ Hamiltonian `sum_m sx sx + sy sy + Delta (sz sz - 1)`, `Delta = (q + q^{-1})/2`, on a sector.
pub fn hamiltonian(sector: &Sector, params: &ModelParams) -> CMatrix {
    let m = sector.m;
    let delta = (params.q + params.q.inv()) * 0.5;
    let mut h = CMatrix::zeros(sector.dim(), sector.dim());
    for (col, &s) in sector.states.iter().enumerate() {
        for site in 0..m {
            let nxt = (site + 1) % m;
            let (a, b) = ((s >> site) & 1, (s >> nxt) & 1);
            if a == b {
                continue;
            }
            // sz sz - 1 = -2 on antiparallel pairs; flip term has amplitude 2
            h[(col, col)] += delta * -2.0;
            let t = s ^ (1 << site) ^ (1 << nxt);
            let row = sector.index_of(t).expect("hop conserves S^z");
            h[(row, col)] += Complex64::new(2.0, 0.0);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{enumerate_sector, momentum_blocks};
    use crate::numerics::{c64, vec_norm};

    fn params(n: usize, m: usize) -> ModelParams {
        ModelParams::new(n, m).unwrap()
    }

    /// Independent oracle: dense trace of an explicit Kronecker product of 2d x 2d site matrices.
    fn dense_trace(site: &CMatrix, d: usize, m: usize) -> CMatrix {
        // site is (2 quantum x d aux) with quantum outer index; build the monodromy on
        // quantum^{M} x aux by explicit embedding and then trace out aux.
        let qdim = 1usize << m;
        let mut mono = CMatrix::identity(qdim * d);
        for s in 0..m {
            let mut op = CMatrix::zeros(qdim * d, qdim * d);
            for qin in 0..qdim {
                let bin = (qin >> s) & 1;
                for bout in 0..2usize {
                    let qout = (qin & !(1 << s)) | (bout << s);
                    for ain in 0..d {
                        for aout in 0..d {
                            let v = site[(bout * d + aout, bin * d + ain)];
                            op[(qout * d + aout, qin * d + ain)] += v;
                        }
                    }
                }
            }
            mono = op.matmul(&mono);
        }
        CMatrix::from_fn(qdim, qdim, |i, j| {
            (0..d).map(|a| mono[(i * d + a, j * d + a)]).sum()
        })
    }

    fn r_site(w: &BoltzmannWeights) -> CMatrix {
        // quantum outer, aux inner
        let mut r = CMatrix::zeros(4, 4);
        r[(0, 0)] = w.a;
        r[(1, 1)] = w.b;
        r[(2, 2)] = w.b;
        r[(3, 3)] = w.a;
        r[(1, 2)] = w.c_prime; // quantum down->up, aux 0->1
        r[(2, 1)] = w.c; // quantum up->down, aux 1->0
        r
    }

    #[test]
    fn weights_at_special_points() {
        let q = params(3, 2).q;
        let w = boltzmann_weights(c64(1.0, 0.0), q).unwrap();
        assert!((w.a - 1.0).norm() < 1e-15 && w.b.norm() < 1e-15);
        assert!((w.c - 1.0).norm() < 1e-15 && (w.c_prime - 1.0).norm() < 1e-15);
        let w = boltzmann_weights(c64(0.0, 0.0), q).unwrap();
        assert!(
            (w.b - q).norm() < 1e-15
                && (w.c - (ONE - q * q)).norm() < 1e-15
                && w.c_prime.norm() == 0.0
        );
        let z = c64(0.3, -0.7);
        let w = boltzmann_weights(z, q).unwrap();
        let den = ONE - z * q * q;
        assert!((w.b - (ONE - z) * q / den).norm() < 1e-15);
        assert!((w.c_prime - w.c * z).norm() < 1e-15);
        assert!(matches!(
            boltzmann_weights(q.powi(-2), q),
            Err(Error::WeightSingularity(_))
        ));
    }

    #[test]
    fn rep_examples() {
        let p = params(3, 2);
        let rep = build_rep(MuParam::real(1.0), &p);
        let f = rep.f();
        let e = rep.e();
        let v2 = vec![ZERO, ZERO, ONE];
        assert!(vec_norm(&f.matvec(&v2)) == 0.0);
        assert!(vec_norm(&e.matvec(&[ONE, ZERO, ZERO])) == 0.0);
        // mu = 1, n = 1: (2 - q^2 - q^{-2}) / (q - q^{-1})^2, and 2 - q^2 - q^{-2} = -(q - q^{-1})^2
        let q = p.q;
        let direct = (c64(2.0, 0.0) - q * q - (q * q).inv()) / (q - q.inv()).powi(2);
        assert!((rep.e_coef[1] - direct).norm() < 1e-14);
        assert!((rep.e_coef[1] + 1.0).norm() < 1e-14);
        let mu = MuParam::new(c64(0.7, 0.4));
        let rep = build_rep(mu, &p);
        let t = rep.t();
        let t6 = t.matmul(&t).matmul(&t).matmul(&t).matmul(&t).matmul(&t);
        assert!((&t6 - &CMatrix::identity(3).scale(mu.value.powi(-3))).frobenius() < 1e-13);
    }

    #[test]
    fn rep_relations_hold() {
        for n in 3..=8 {
            let p = params(n, 2);
            for mu in [c64(1.3, 0.0), c64(0.2, 0.9), c64(-2.0, 0.5)] {
                let r = build_rep(MuParam::new(mu), &p).relation_residuals();
                assert!(r.max() < 1e-12, "N={n}: {r:?}");
                if n % 2 == 1 {
                    assert!(r.t_power_printed < 1e-12);
                } else {
                    assert!(r.t_power_printed > 0.5);
                }
            }
        }
    }

    #[test]
    fn l_operator_blocks() {
        let p = params(3, 2);
        let l0 = build_l(MuParam::real(1.0), ZERO, &p);
        let rep = build_rep(MuParam::real(1.0), &p);
        assert!((&l0.a + &rep.t_inv()).frobenius() < 1e-15);
        assert!(l0.b.frobenius() == 0.0);
        assert!((&l0.d + &rep.t()).frobenius() < 1e-15);
        let l1 = build_l(MuParam::real(1.0), ONE, &p);
        let q = p.q;
        let (t, ti, e, f) = (rep.t(), rep.t_inv(), rep.e(), rep.f());
        assert!((&l1.a - &(&t.scale(q) - &ti)).frobenius() < 1e-14);
        assert!((&l1.b - &t.matmul(&f).scale(q * (q - q.inv()))).frobenius() < 1e-14);
        assert!((&l1.c - &e.matmul(&ti).scale(q - q.inv())).frobenius() < 1e-14);
        assert!((&l1.d - &(&ti.scale(q) - &t)).frobenius() < 1e-14);
        let l2 = build_l(MuParam::real(1.0), c64(3.0, -1.0), &p);
        assert_eq!(l1.c, l2.c);
    }

    #[test]
    fn site_lax_matches_l_matrix() {
        let p = params(5, 2);
        let mu = MuParam::new(c64(0.9, 0.3));
        let w = c64(0.4, 1.1);
        let l = build_l(mu, w, &p).to_matrix();
        let lax = SiteLax::from_rep(&build_rep(mu, &p), w);
        let d = lax.dim;
        for bo in 0..2 {
            for bi in 0..2 {
                let e = &lax.entries[bo][bi];
                for n in 0..d {
                    for k in 0..d {
                        let want = l[(bo * d + k, bi * d + n)];
                        let got = if k as i32 == n as i32 + e.shift {
                            e.y[n]
                        } else {
                            ZERO
                        };
                        assert!((want - got).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn transfer_matches_dense_oracle() {
        let p = params(3, 3);
        let z = c64(0.4, 0.3);
        let w = boltzmann_weights(z, p.q).unwrap();
        let dense = dense_trace(&r_site(&w), 2, 3);
        let lax = SiteLax::from_weights(&w);
        for s in 0..8u32 {
            let mut out = vec![ZERO; 8];
            trace_column(&lax, s, 3, ONE, &mut out);
            for t in 0..8 {
                assert!((out[t] - dense[(t, s as usize)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn q_matches_dense_oracle_m2() {
        let p = params(3, 2);
        let mu = MuParam::new(c64(1.3, 0.0));
        let z = c64(0.5, -0.2);
        let l = build_l(mu, z / mu.value, &p).to_matrix();
        let dense = dense_trace(&l, 3, 2);
        let lax = q_lax(mu, z, &p);
        let full = apply_full(&lax, &crate::lattice::unit_state(1, 2), 2);
        for t in 0..4 {
            assert!((full[t] - dense[(t, 1)]).norm() < 1e-13);
        }
        for s in 0..4u32 {
            let mut out = vec![ZERO; 4];
            trace_column(&lax, s, 2, ONE, &mut out);
            for t in 0..4 {
                assert!((out[t] - dense[(t, s as usize)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn transfer_at_one_is_shift() {
        let p = params(3, 5);
        let sec = enumerate_sector(&p, 1).unwrap();
        let t = transfer_block(ONE, &sec, &p, false).unwrap().matrix;
        for (col, &s) in sec.states.iter().enumerate() {
            let target = sec.index_of(shift_state(s, 5)).unwrap();
            for row in 0..sec.dim() {
                let want = if row == target { ONE } else { ZERO };
                assert!((t[(row, col)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn vacuum_transfer_eigenvalue() {
        let p = params(3, 6);
        let sec = enumerate_sector(&p, 6).unwrap();
        let z = c64(0.31, 0.77);
        let t = transfer_block(z, &sec, &p, false).unwrap().matrix;
        let b = weight_b(z, p.q);
        assert!((t[(0, 0)] - (ONE + b.powi(6))).norm() < 1e-13);
    }

    #[test]
    fn transfer_m2_two_site_trace() {
        let p = params(4, 2);
        let z = c64(-0.3, 0.6);
        let w = boltzmann_weights(z, p.q).unwrap();
        let sec = enumerate_sector(&p, 0).unwrap();
        let t = transfer_block(z, &sec, &p, false).unwrap().matrix;
        // By hand: states du (site0 down) and ud. Diagonal: b a + a b; off-diagonal: c c' both ways.
        assert!((t[(0, 0)] - (w.a * w.b + w.b * w.a)).norm() < 1e-14);
        assert!((t[(1, 0)] - w.c * w.c_prime).norm() < 1e-14);
        assert!((t[(0, 1)] - w.c * w.c_prime).norm() < 1e-14);
    }

    #[test]
    fn all_up_q_closed_form() {
        for (n, m) in [(3, 6), (4, 4), (5, 5), (3, 3)] {
            let p = params(n, m);
            let sec = enumerate_sector(&p, m as i32).unwrap();
            let mu = MuParam::new(c64(0.8, 0.3));
            let z = c64(0.6, 0.2);
            let qb = q_block(mu, z, &sec, &p).matrix;
            let want = all_up_q_eigenvalue(mu, z, &p);
            assert!((qb[(0, 0)] - want).norm() <= 1e-12 * want.norm().max(1.0));
        }
    }

    #[test]
    fn q_poly_coefficients() {
        let p = params(3, 4);
        let mu = MuParam::new(c64(1.3, 0.0));
        let sec = enumerate_sector(&p, 4).unwrap();
        let coeffs = q_poly_coeffs(mu, &sec, &p, 0.83);
        let rep = build_rep(mu, &p);
        let q0: Complex64 = rep.tau.iter().map(|t| t.inv().powi(4)).sum();
        assert!((coeffs[0][(0, 0)] - q0).norm() < 1e-12 * q0.norm().max(1.0));
        let sec0 = enumerate_sector(&p, 0).unwrap();
        let coeffs = q_poly_coeffs(mu, &sec0, &p, 0.83);
        let z0 = c64(-0.4, 1.7);
        let held = q_block(mu, z0, &sec0, &p).matrix;
        let recon = eval_matrix_poly(&coeffs, z0);
        assert!((&held - &recon).frobenius() <= 1e-9 * held.frobenius());
        assert!(coeffs[4].frobenius() > 1e-6);
    }

    #[test]
    fn q_commutes_with_sz_and_shift() {
        let p = params(3, 5);
        let mu = MuParam::new(c64(0.7, 0.5));
        let lax = q_lax(mu, c64(0.3, 0.9), &p);
        let v: Vec<Complex64> = (0..32)
            .map(|i| c64((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let m = 5;
        use crate::lattice::{apply_symmetry, Symmetry};
        for sym in [Symmetry::Sz, Symmetry::Shift] {
            let a = apply_full(&lax, &apply_symmetry(sym, &v, m), m);
            let b = apply_symmetry(sym, &apply_full(&lax, &v, m), m);
            let diff: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            assert!(vec_norm(&diff) <= 1e-10 * vec_norm(&a));
        }
    }

    #[test]
    fn block_matrix_matches_projected_sector_matrix() {
        let p = params(3, 6);
        let sec = enumerate_sector(&p, 0).unwrap();
        let lax = q_lax(MuParam::new(c64(1.3, 0.0)), c64(0.4, 0.5), &p);
        let full = sector_matrix(&lax, &sec);
        for blk in momentum_blocks(&sec) {
            if blk.dim() == 0 {
                continue;
            }
            let v = blk.isometry(&sec);
            let want = v.adjoint().matmul(&full).matmul(&v);
            let got = block_matrix(&lax, &blk);
            assert!((&want - &got).frobenius() <= 1e-12 * want.frobenius().max(1.0));
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let p = params(3, 2);
        let sec = enumerate_sector(&p, 0).unwrap();
        let h = hamiltonian(&sec, &p);
        let delta = (p.q + p.q.inv()) * 0.5;
        // two bonds, each antiparallel: diagonal -4 Delta, hopping 2 + 2
        assert!((h[(0, 0)] + delta * 4.0).norm() < 1e-14);
        assert!((h[(0, 1)] - 4.0).norm() < 1e-14);
        let p6 = params(3, 6);
        let up = enumerate_sector(&p6, 6).unwrap();
        assert!(hamiltonian(&up, &p6)[(0, 0)].norm() == 0.0);
        let p4 = params(3, 4);
        let s4 = enumerate_sector(&p4, 0).unwrap();
        let h4 = hamiltonian(&s4, &p4);
        let t4 = transfer_block(c64(0.3, 0.2), &s4, &p4, false)
            .unwrap()
            .matrix;
        assert!(h4.commutator(&t4).frobenius() <= 1e-9 * h4.frobenius() * t4.frobenius());
    }
}
