use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ABS_FLOOR;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Dense polynomial, coefficients in ascending degree. The zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CPoly {
    coeffs: Vec<Complex64>,
}

impl CPoly {
    /// Drops exactly-zero leading coefficients.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| c.re == 0.0 && c.im == 0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![] }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// `z - r`.
    pub fn linear_root(r: Complex64) -> Self {
        Self::new(vec![-r, Complex64::new(1.0, 0.0)])
    }

    /// Monic polynomial with the listed roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut p = Self::constant(Complex64::new(1.0, 0.0));
        for &r in roots {
            p = &p * &Self::linear_root(r);
        }
        p
    }

    /// `z^k`.
    pub fn monomial(k: usize) -> Self {
        let mut c = vec![ZERO; k + 1];
        c[k] = Complex64::new(1.0, 0.0);
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Removes leading coefficients below `rel * max|coeff|`.
    pub fn trimmed(&self, rel: f64) -> Self {
        let tol = rel * self.max_abs_coeff();
        let mut c = self.coeffs.clone();
        while c.last().is_some_and(|x| x.norm() <= tol) {
            c.pop();
        }
        Self { coeffs: c }
    }

    /// Trimmed at the default truncation tolerance and scaled to leading coefficient 1.
    pub fn monic(&self) -> Self {
        let t = self.trimmed(1e-12);
        if t.is_zero() {
            return t;
        }
        let l = t.leading();
        t.scale(l.inv())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Evaluates the coefficient-magnitude polynomial at `|z|`; a natural scale for rounding error.
    pub fn eval_abs(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    /// `p(c z)`.
    pub fn rescale_arg(&self, c: Complex64) -> Self {
        let mut pw = Complex64::new(1.0, 0.0);
        let mut out = Vec::with_capacity(self.coeffs.len());
        for &a in &self.coeffs {
            out.push(a * pw);
            pw *= c;
        }
        Self::new(out)
    }

    /// `p(z^k)`.
    pub fn compose_power(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut out = vec![ZERO; (self.coeffs.len() - 1) * k + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            out[i * k] = a;
        }
        Self::new(out)
    }

    /// Multiplies by `z^k`.
    pub fn shift_up(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut out = vec![ZERO; k];
        out.extend_from_slice(&self.coeffs);
        Self::new(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(Complex64::new(1.0, 0.0));
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Largest coefficientwise difference relative to the larger operand.
    pub fn rel_diff(&self, other: &Self) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        let scale = self
            .max_abs_coeff()
            .max(other.max_abs_coeff())
            .max(ABS_FLOOR);
        (0..n)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
            / scale
    }
}

impl Add for &CPoly {
    type Output = CPoly;
    fn add(self, rhs: &CPoly) -> CPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        CPoly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &CPoly {
    type Output = CPoly;
    fn sub(self, rhs: &CPoly) -> CPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        CPoly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &CPoly {
    type Output = CPoly;
    fn mul(self, rhs: &CPoly) -> CPoly {
        if self.is_zero() || rhs.is_zero() {
            return CPoly::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        CPoly::new(out)
    }
}

/// Polynomial long division. `den` must be nonzero.
pub fn poly_divmod(num: &CPoly, den: &CPoly) -> Result<(CPoly, CPoly)> {
    let dd = den.degree().ok_or(Error::ZeroDivisor)?;
    let Some(nd) = num.degree() else {
        return Ok((CPoly::zero(), CPoly::zero()));
    };
    if nd < dd {
        return Ok((CPoly::zero(), num.clone()));
    }
    let lead = den.leading();
    let mut rem = num.coeffs().to_vec();
    let mut quot = vec![ZERO; nd - dd + 1];
    for k in (0..=nd - dd).rev() {
        let c = rem[k + dd] / lead;
        quot[k] = c;
        for (j, d) in den.coeffs().iter().enumerate() {
            rem[k + j] -= c * d;
        }
        rem[k + dd] = ZERO;
    }
    rem.truncate(dd);
    Ok((CPoly::new(quot), CPoly::new(rem)))
}

/// Least-degree fit through `samples`: the unique polynomial of degree at most `degree_bound`.
pub fn interpolate(samples: &[(Complex64, Complex64)], degree_bound: usize) -> Result<CPoly> {
    let n = degree_bound + 1;
    if samples.len() < n {
        return Err(Error::TooFewSamples {
            needed: n,
            got: samples.len(),
        });
    }
    let rho = samples
        .iter()
        .map(|s| s.0.norm())
        .fold(0.0, f64::max)
        .max(ABS_FLOOR);
    for i in 0..samples.len() {
        for j in 0..i {
            if (samples[i].0 - samples[j].0).norm() <= 1e-14 * rho {
                return Err(Error::DuplicateNodes(j, i));
            }
        }
    }
    // Work in x / rho to keep the Vandermonde columns comparable.
    let v = super::CMatrix::from_fn(samples.len(), n, |i, j| (samples[i].0 / rho).powu(j as u32));
    let b: Vec<Complex64> = samples.iter().map(|s| s.1).collect();
    let y = v.least_squares(&b)?;
    let coeffs: Vec<Complex64> = y
        .iter()
        .enumerate()
        .map(|(j, c)| c / rho.powi(j as i32))
        .collect();
    let p = CPoly::new(coeffs);
    let vmax = b.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let residual = samples
        .iter()
        .map(|(x, f)| (p.eval(*x) - f).norm())
        .fold(0.0, f64::max);
    if residual > 1e-10 * vmax.max(ABS_FLOOR) {
        return Err(Error::Inconsistent { residual });
    }
    Ok(p)
}
