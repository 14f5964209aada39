//! Loop-algebra modes from the divided powers of the quantum group generators,
//! highest-weight detection, and the classical Drinfeld polynomial.
//!
//! Operators act on the full `2^M` space and are stored column-wise: for every
//! input basis state, the list of output states with their coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::t_matrix;
use crate::lattice::{enumerate_sector, reverse_state, two_sz_of, ModelParams, Sector};
use crate::numerics::{inner, poly_roots, vec_norm, CMatrix, CPoly, ABS_FLOOR};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Pass threshold for algebra relations and commutation with the transfer matrix.
pub const RELATION_TOL: f64 = 1e-9;
/// Eigen-residual bound for `h_n Omega = lambda_n Omega`, relative to `|Omega|`.
pub const WEIGHT_TOL: f64 = 1e-7;

/// Sparse operator on the full spin space.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    pub m: usize,
    cols: Vec<Vec<(u32, Complex64)>>,
}

impl SparseOp {
    pub fn zero(m: usize) -> Self {
        Self {
            m,
            cols: vec![Vec::new(); 1 << m],
        }
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; v.len()];
        for (s, col) in self.cols.iter().enumerate() {
            if v[s] != ZERO {
                for &(t, c) in col {
                    out[t as usize] += c * v[s];
                }
            }
        }
        out
    }

    /// Conjugation by spin reversal.
    pub fn reversed(&self) -> Self {
        let m = self.m;
        let mut cols = vec![Vec::new(); self.dim()];
        for (s, col) in self.cols.iter().enumerate() {
            cols[reverse_state(s as u32, m) as usize] =
                col.iter().map(|&(t, c)| (reverse_state(t, m), c)).collect();
        }
        Self { m, cols }
    }

    /// Matrix from `from` sector coordinates to `to` sector coordinates.
    pub fn between(&self, from: &Sector, to: &Sector) -> CMatrix {
        let mut a = CMatrix::zeros(to.dim(), from.dim());
        for (c, &s) in from.states.iter().enumerate() {
            for &(t, x) in &self.cols[s as usize] {
                if let Some(r) = to.index_of(t) {
                    a[(r, c)] += x;
                }
            }
        }
        a
    }

    /// Largest column 1-norm, an operator-norm bound.
    pub fn norm_bound(&self) -> f64 {
        self.cols
            .iter()
            .map(|c| c.iter().map(|x| x.1.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// `E_1^{(N)}(q)`: lowers `N` down spins to up, dressed by `q^{(N-1-j) sigma^z}` between the `j`-th and `(j+1)`-th flipped sites.
pub fn divided_power(q: Complex64, n: usize, m: usize) -> SparseOp {
    let mut op = SparseOp::zero(m);
    let mut comb = Vec::with_capacity(n);
    for s in 0..(1u32 << m) {
        let downs: Vec<usize> = (0..m).filter(|&i| s >> i & 1 == 1).collect();
        if downs.len() < n {
            continue;
        }
        comb.clear();
        combos(&downs, n, 0, &mut comb, &mut |c| {
            let mut coef = ONE;
            for j in 0..n - 1 {
                for site in c[j] + 1..c[j + 1] {
                    let sz = if s >> site & 1 == 0 { 1 } else { -1 };
                    coef *= q.powi((n - 1 - j) as i32 * sz);
                }
            }
            let t = c.iter().fold(s, |acc, &i| acc ^ (1 << i));
            op.cols[s as usize].push((t, coef));
        });
    }
    op
}

fn combos(
    items: &[usize],
    k: usize,
    start: usize,
    cur: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]),
) {
    if cur.len() == k {
        f(cur);
        return;
    }
    for i in start..items.len() {
        if items.len() - i < k - cur.len() {
            break;
        }
        cur.push(items[i]);
        combos(items, k, i + 1, cur, f);
        cur.pop();
    }
}

/// The four divided powers `E_1, F_1, E_0, F_0` at `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DividedPowers {
    pub e1: SparseOp,
    pub f1: SparseOp,
    pub e0: SparseOp,
    pub f0: SparseOp,
}

pub fn build_divided_powers(params: &ModelParams) -> Result<DividedPowers> {
    if params.n.is_multiple_of(2) {
        return Err(Error::Unsupported(
            "loop generators are built for odd N only".into(),
        ));
    }
    if params.m < params.n {
        return Err(Error::InvalidParams(format!(
            "M = {} is shorter than N = {}",
            params.m, params.n
        )));
    }
    let e1 = divided_power(params.q, params.n, params.m);
    let e1_inv = divided_power(params.q.inv(), params.n, params.m);
    Ok(DividedPowers {
        e0: e1.reversed(),
        f1: e1_inv.reversed(),
        f0: e1_inv,
        e1,
    })
}

/// Mode generators; composite modes are applied lazily through commutators.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopGenerators {
    pub n: usize,
    pub m: usize,
    pub x0_plus: SparseOp,
    pub x0_minus: SparseOp,
    pub x1_minus: SparseOp,
    pub xm1_plus: SparseOp,
}

pub fn mode_generators(params: &ModelParams) -> Result<LoopGenerators> {
    let d = build_divided_powers(params)?;
    Ok(LoopGenerators {
        n: params.n,
        m: params.m,
        x0_plus: d.e1,
        x0_minus: d.f1,
        x1_minus: d.e0,
        xm1_plus: d.f0,
    })
}

fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn scale(a: &[Complex64], s: f64) -> Vec<Complex64> {
    a.iter().map(|x| x * s).collect()
}

impl LoopGenerators {
    /// `h_0 = 2 S^z / N`.
    pub fn h0(&self, v: &[Complex64]) -> Vec<Complex64> {
        v.iter()
            .enumerate()
            .map(|(s, x)| x * (two_sz_of(s as u32, self.m) as f64 / self.n as f64))
            .collect()
    }

    /// `h_1 = [x_0^+, x_1^-]`.
    pub fn h1(&self, v: &[Complex64]) -> Vec<Complex64> {
        sub(
            &self.x0_plus.apply(&self.x1_minus.apply(v)),
            &self.x1_minus.apply(&self.x0_plus.apply(v)),
        )
    }

    /// `h_{-1} = [x_{-1}^+, x_0^-]`.
    pub fn hm1(&self, v: &[Complex64]) -> Vec<Complex64> {
        sub(
            &self.xm1_plus.apply(&self.x0_minus.apply(v)),
            &self.x0_minus.apply(&self.xm1_plus.apply(v)),
        )
    }

    /// `x_n^- v` for `n >= 0` via `x_{n+1}^- = -1/2 [h_1, x_n^-]`.
    pub fn x_minus(&self, n: usize, v: &[Complex64]) -> Vec<Complex64> {
        match n {
            0 => self.x0_minus.apply(v),
            1 => self.x1_minus.apply(v),
            _ => {
                let a = self.h1(&self.x_minus(n - 1, v));
                let b = self.x_minus(n - 1, &self.h1(v));
                scale(&sub(&a, &b), -0.5)
            }
        }
    }

    /// `h_n v = [x_0^+, x_n^-] v`.
    pub fn h(&self, n: usize, v: &[Complex64]) -> Vec<Complex64> {
        if n == 0 {
            return self.h0(v);
        }
        sub(
            &self.x0_plus.apply(&self.x_minus(n, v)),
            &self.x_minus(n, &self.x0_plus.apply(v)),
        )
    }
}

/// Outcome of one operator relation on the commensurate sectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationCheck {
    pub name: String,
    pub residual: f64,
    pub pass: bool,
}

fn commensurate_basis(params: &ModelParams) -> Vec<u32> {
    (0..(1u32 << params.m))
        .filter(|&s| two_sz_of(s, params.m).rem_euclid(params.n as i32) == 0)
        .collect()
}

type Side<'a> = Box<dyn Fn(&[Complex64]) -> Vec<Complex64> + 'a>;

fn comm<'a>(a: &'a SparseOp, b: Side<'a>) -> Side<'a> {
    Box::new(move |v: &[Complex64]| sub(&a.apply(&b(v)), &b(&a.apply(v))))
}

/// Checks the mode relations column by column on every commensurate basis state.
pub fn check_relations(gens: &LoopGenerators, params: &ModelParams) -> Vec<RelationCheck> {
    let g = gens;
    let rels: Vec<(&str, Side, Side)> = vec![
        (
            "[x0+, x0-] = h0",
            comm(&g.x0_plus, Box::new(|v| g.x0_minus.apply(v))),
            Box::new(|v| g.h0(v)),
        ),
        (
            "[x-1+, x1-] = h0",
            comm(&g.xm1_plus, Box::new(|v| g.x1_minus.apply(v))),
            Box::new(|v| g.h0(v)),
        ),
        (
            "[h0, x0+] = 2 x0+",
            Box::new(|v| sub(&g.h0(&g.x0_plus.apply(v)), &g.x0_plus.apply(&g.h0(v)))),
            Box::new(|v| scale(&g.x0_plus.apply(v), 2.0)),
        ),
        (
            "[h0, x1-] = -2 x1-",
            Box::new(|v| sub(&g.h0(&g.x1_minus.apply(v)), &g.x1_minus.apply(&g.h0(v)))),
            Box::new(|v| scale(&g.x1_minus.apply(v), -2.0)),
        ),
        (
            "[h1, x0-] = -2 x1-",
            Box::new(|v| sub(&g.h1(&g.x0_minus.apply(v)), &g.x0_minus.apply(&g.h1(v)))),
            Box::new(|v| scale(&g.x1_minus.apply(v), -2.0)),
        ),
        (
            "[h-1, x1-] = -2 x0-",
            Box::new(|v| sub(&g.hm1(&g.x1_minus.apply(v)), &g.x1_minus.apply(&g.hm1(v)))),
            Box::new(|v| scale(&g.x0_minus.apply(v), -2.0)),
        ),
        (
            "[x-1+, x2-] = h1",
            comm(&g.xm1_plus, Box::new(|v| g.x_minus(2, v))),
            Box::new(|v| g.h1(v)),
        ),
        (
            "[h1, h-1] = 0",
            Box::new(|v| sub(&g.h1(&g.hm1(v)), &g.hm1(&g.h1(v)))),
            Box::new(|v| vec![ZERO; v.len()]),
        ),
    ];
    let basis = commensurate_basis(params);
    let dim = 1usize << params.m;
    rels.into_iter()
        .map(|(name, lhs, rhs)| {
            let (mut diff, mut big) = (0.0f64, 0.0f64);
            for &s in &basis {
                let mut e = vec![ZERO; dim];
                e[s as usize] = ONE;
                let (l, r) = (lhs(&e), rhs(&e));
                diff += vec_norm(&sub(&l, &r)).powi(2);
                big = big.max(vec_norm(&l)).max(vec_norm(&r));
            }
            let residual = diff.sqrt() / big.max(1.0);
            RelationCheck {
                name: name.to_string(),
                residual,
                pass: residual <= RELATION_TOL,
            }
        })
        .collect()
}

/// `E T~(z) = T~(z) E` between commensurate sectors, for each divided power; maximum relative residual.
pub fn divided_power_commutation(z: Complex64, params: &ModelParams) -> Result<f64> {
    let d = build_divided_powers(params)?;
    let m = params.m as i32;
    let mut worst = 0.0f64;
    for s in (-m..=m)
        .step_by(2)
        .filter(|s| s.rem_euclid(params.n as i32) == 0)
    {
        let src = enumerate_sector(params, s)?;
        let (ts, _) = t_matrix(z, params.q, &src, true)?;
        for (op, ds) in [(&d.e1, 2), (&d.e0, -2), (&d.f1, -2), (&d.f0, 2)] {
            let t2 = s + ds * params.n as i32;
            if t2.abs() > m {
                continue;
            }
            let dst = enumerate_sector(params, t2)?;
            let (td, _) = t_matrix(z, params.q, &dst, true)?;
            let e = op.between(&src, &dst);
            let l = e.matmul(&ts);
            let r = td.matmul(&e);
            let big = l.frobenius().max(r.frobenius());
            if big > ABS_FLOOR {
                worst = worst.max((&l - &r).frobenius() / big);
            }
        }
    }
    Ok(worst)
}

/// Weights of a highest-weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighestWeight {
    /// `|x_0^+ Omega| / |Omega|` and `|x_{-1}^+ Omega| / |Omega|`.
    pub annihilation: (f64, f64),
    /// `lambda_0 .. lambda_{n_max}` as Rayleigh quotients.
    pub lambdas: Vec<Complex64>,
    /// Eigen-residuals `|h_n Omega - lambda_n Omega| / |Omega|`.
    pub residuals: Vec<f64>,
    pub pass: bool,
}

/// Embeds sector coordinates into the full space.
pub fn embed(v: &[Complex64], sector: &Sector) -> Vec<Complex64> {
    let mut out = vec![ZERO; 1 << sector.m];
    for (x, &s) in v.iter().zip(&sector.states) {
        out[s as usize] = *x;
    }
    out
}

/// Checks `x_0^+ Omega = x_{-1}^+ Omega = 0` and computes `lambda_n` for `n <= n_max`.
pub fn highest_weight_check(
    gens: &LoopGenerators,
    omega: &[Complex64],
    n_max: usize,
) -> Result<HighestWeight> {
    let nrm = vec_norm(omega);
    if nrm <= ABS_FLOOR {
        return Err(Error::NotHighestWeight(f64::INFINITY));
    }
    let scale_p = gens.x0_plus.norm_bound().max(1.0);
    let scale_m = gens.xm1_plus.norm_bound().max(1.0);
    let a0 = vec_norm(&gens.x0_plus.apply(omega)) / (nrm * scale_p);
    let a1 = vec_norm(&gens.xm1_plus.apply(omega)) / (nrm * scale_m);
    let nn = inner(omega, omega);
    let mut lambdas = Vec::with_capacity(n_max + 1);
    let mut residuals = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let hv = gens.h(n, omega);
        let lam = inner(omega, &hv) / nn;
        let r: Vec<Complex64> = hv.iter().zip(omega).map(|(a, b)| a - lam * b).collect();
        residuals.push(vec_norm(&r) / nrm);
        lambdas.push(lam);
    }
    let pass =
        a0 <= RELATION_TOL && a1 <= RELATION_TOL && residuals.iter().all(|r| *r <= WEIGHT_TOL);
    Ok(HighestWeight {
        annihilation: (a0, a1),
        lambdas,
        residuals,
        pass,
    })
}

/// `<Omega|(x_0^+)^2 (x_1^-)^2|Omega> / <Omega|Omega>`, equal to `4 a_+ a_-` when `lambda_0 = 2`.
pub fn double_mode_product(gens: &LoopGenerators, omega: &[Complex64]) -> Complex64 {
    let v = gens.x1_minus.apply(&gens.x1_minus.apply(omega));
    let w = gens.x0_plus.apply(&gens.x0_plus.apply(&v));
    inner(omega, &w) / inner(omega, omega)
}

/// Drinfeld polynomial `P(u) = prod (1 - a_j u)^{2 s_j}` with its evaluation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrinfeldData {
    pub lambdas: Vec<Complex64>,
    /// `(a_j, 2 s_j)`.
    pub parameters: Vec<(Complex64, usize)>,
    pub poly: CPoly,
}

impl DrinfeldData {
    /// `prod (2 s_j + 1)`.
    pub fn dimension(&self) -> usize {
        self.parameters.iter().map(|p| p.1 + 1).product()
    }

    /// Evaluation parameters repeated by multiplicity.
    pub fn expanded(&self) -> Vec<Complex64> {
        self.parameters
            .iter()
            .flat_map(|&(a, k)| std::iter::repeat_n(a, k))
            .collect()
    }

    /// Largest relative gap between `lambda_n` and the power sums of the parameters.
    pub fn power_sum_error(&self) -> f64 {
        let a = self.expanded();
        self.lambdas
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, l)| {
                let p: Complex64 = a.iter().map(|x| x.powu(n as u32)).sum();
                (p - l).norm() / l.norm().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Reconstructs `P(u)` from `lambda_0 = deg P` and power sums `lambda_1 .. lambda_{deg}` (Newton's identities).
pub fn drinfeld_polynomial(lambdas: &[Complex64]) -> Result<DrinfeldData> {
    let l0 = lambdas.first().copied().unwrap_or(ZERO);
    let deg = l0.re.round();
    if (l0 - Complex64::new(deg, 0.0)).norm() > 1e-8 || deg < 0.0 {
        return Err(Error::NonIntegerWeight(l0.re));
    }
    let deg = deg as usize;
    if lambdas.len() < deg + 1 {
        return Err(Error::TooFewSamples {
            needed: deg + 1,
            got: lambdas.len(),
        });
    }
    // e_k from k e_k = sum_{i=1..k} (-1)^{i-1} e_{k-i} p_i
    let mut e = vec![ONE];
    for k in 1..=deg {
        let mut s = ZERO;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            s += e[k - i] * lambdas[i] * sign;
        }
        e.push(s / k as f64);
    }
    let poly = CPoly::new(
        e.iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 0 { *c } else { -c })
            .collect(),
    );
    let parameters = if deg == 0 {
        vec![]
    } else {
        // roots of P(u) in u are 1/a_j; a_j are the roots of the reversed polynomial
        let rev = CPoly::new(poly.coeffs().iter().rev().copied().collect());
        poly_roots(&rev)?.roots
    };
    Ok(DrinfeldData {
        lambdas: lambdas.to_vec(),
        parameters,
        poly,
    })
}
