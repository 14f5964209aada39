//! Spin-chain state space: parameters, S^z sectors, momentum blocks and the
//! finite symmetries (total spin, spin reversal, parity, translation).
//!
//! Basis states are bitmasks with bit `m` set when site `m` carries a down spin.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported chain length.
pub const MAX_SITES: usize = 12;

/// Root-of-unity order, chain length, and the fixed branch of `q^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub n_prime: usize,
    pub m: usize,
    pub q: Complex64,
    pub q_half: Complex64,
    /// Relative branch of `sqrt(mu q)` against `sqrt(mu) q^{1/2}`; fixed by calibration.
    pub shift_branch: f64,
}

impl ModelParams {
    /// `q = exp(2 pi i / n)`, `q^{1/2} = exp(i pi / n)`.
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParams(format!(
                "order N = {n} must be at least 3"
            )));
        }
        if m == 0 || m > MAX_SITES {
            return Err(Error::InvalidParams(format!(
                "chain length M = {m} outside 1..={MAX_SITES}"
            )));
        }
        let n_prime = if n % 2 == 1 { n } else { n / 2 };
        Ok(Self {
            n,
            n_prime,
            m,
            q: Complex64::from_polar(1.0, 2.0 * PI / n as f64),
            q_half: Complex64::from_polar(1.0, PI / n as f64),
            shift_branch: 1.0,
        })
    }

    /// Same chain with `q -> q^{-1}` (and `q^{1/2} -> q^{-1/2}`).
    pub fn inverted(&self) -> Self {
        Self {
            q: self.q.inv(),
            q_half: self.q_half.inv(),
            ..*self
        }
    }

    pub fn with_m(&self, m: usize) -> Result<Self> {
        let mut p = Self::new(self.n, m)?;
        p.q = self.q;
        p.q_half = self.q_half;
        p.shift_branch = self.shift_branch;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        1 << self.m
    }

    /// Checks `q^N = 1`, primitivity, and `q_half^2 = q`.
    pub fn check(&self) -> Result<()> {
        let one = Complex64::new(1.0, 0.0);
        if (self.q.powu(self.n as u32) - one).norm() > 1e-12 {
            return Err(Error::InvalidParams("q^N != 1".into()));
        }
        if (1..self.n).any(|k| (self.q.powu(k as u32) - one).norm() < 1e-9) {
            return Err(Error::InvalidParams("q is not primitive".into()));
        }
        if (self.q_half * self.q_half - self.q).norm() > 1e-12 {
            return Err(Error::InvalidParams("q_half^2 != q".into()));
        }
        let want = if self.n % 2 == 1 { self.n } else { self.n / 2 };
        if self.n_prime != want {
            return Err(Error::InvalidParams("N' inconsistent with N".into()));
        }
        Ok(())
    }
}

/// Twice the total spin of a basis state.
pub fn two_sz_of(mask: u32, m: usize) -> i32 {
    m as i32 - 2 * mask.count_ones() as i32
}

/// Translation by one site: the spin on site `m` moves to site `m+1` (mod M).
pub fn shift_state(mask: u32, m: usize) -> u32 {
    let full = (1u32 << m) - 1;
    ((mask << 1) | (mask >> (m - 1))) & full
}

pub fn reverse_state(mask: u32, m: usize) -> u32 {
    !mask & ((1u32 << m) - 1)
}

/// States of fixed S^z, sorted by bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct Sector {
    pub m: usize,
    pub two_sz: i32,
    pub states: Vec<u32>,
    index: HashMap<u32, usize>,
}

impl Sector {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, mask: u32) -> Option<usize> {
        self.index.get(&mask).copied()
    }

    pub fn n_down(&self) -> usize {
        ((self.m as i32 - self.two_sz) / 2) as usize
    }
}

/// All basis states with `2 S^z = two_sz`.
pub fn enumerate_sector(params: &ModelParams, two_sz: i32) -> Result<Sector> {
    let m = params.m as i32;
    if two_sz.abs() > m || (m - two_sz) % 2 != 0 {
        return Err(Error::InvalidSector(format!(
            "2Sz = {two_sz} impossible for M = {m}"
        )));
    }
    let down = ((m - two_sz) / 2) as u32;
    let states: Vec<u32> = (0..(1u32 << params.m))
        .filter(|s| s.count_ones() == down)
        .collect();
    let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    Ok(Sector {
        m: params.m,
        two_sz,
        states,
        index,
    })
}

/// Every admissible value of `2 S^z`, descending.
pub fn all_two_sz(m: usize) -> Vec<i32> {
    (0..=m).map(|d| m as i32 - 2 * d as i32).collect()
}

/// Momentum `k = 2 pi j / M`.
pub fn momentum(j: usize, m: usize) -> f64 {
    2.0 * PI * j as f64 / m as f64
}

/// `sum_{n=1}^{M} e^{i n k} shift^n |state>` on the full space (length `2^M`).
pub fn momentum_project(state: u32, j: usize, params: &ModelParams) -> Vec<Complex64> {
    let m = params.m;
    let k = momentum(j, m);
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << m];
    let mut s = state;
    for n in 1..=m {
        s = shift_state(s, m);
        v[s as usize] += Complex64::from_polar(1.0, k * n as f64);
    }
    v
}

/// A fixed-(S^z, k) block: orbit representatives compatible with `k`.
#[derive(Debug, Clone)]
pub struct MomentumBlock {
    pub two_sz: i32,
    pub j: usize,
    pub m: usize,
    /// Orbit representatives (smallest mask in each orbit).
    pub reps: Vec<u32>,
    /// Orbit lengths.
    pub periods: Vec<usize>,
}

impl MomentumBlock {
    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    pub fn k(&self) -> f64 {
        momentum(self.j, self.m)
    }

    /// Norm of the unnormalized projected vector of representative `r`: `M / sqrt(period)`.
    pub fn norm(&self, r: usize) -> f64 {
        self.m as f64 / (self.periods[r] as f64).sqrt()
    }

    /// Normalized basis vector `r` in the coordinates of `sector`.
    pub fn basis_vector(&self, r: usize, sector: &Sector) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); sector.dim()];
        let k = self.k();
        let nrm = self.norm(r);
        let mut s = self.reps[r];
        for n in 1..=self.m {
            s = shift_state(s, self.m);
            v[sector.index_of(s).expect("orbit stays in sector")] +=
                Complex64::from_polar(1.0 / nrm, k * n as f64);
        }
        v
    }

    /// Isometry from the block into the sector (columns are `basis_vector`s).
    pub fn isometry(&self, sector: &Sector) -> crate::numerics::CMatrix {
        let cols: Vec<Vec<Complex64>> = (0..self.dim())
            .map(|r| self.basis_vector(r, sector))
            .collect();
        crate::numerics::CMatrix::from_columns(&cols)
    }
}

/// Orbit representative and period of a state under translation.
pub fn orbit(mask: u32, m: usize) -> (u32, usize) {
    let mut rep = mask;
    let mut s = mask;
    for p in 1..=m {
        s = shift_state(s, m);
        if s == mask {
            return (rep, p);
        }
        rep = rep.min(s);
    }
    (rep, m)
}

/// Splits a sector into its `M` momentum blocks (some possibly empty).
pub fn momentum_blocks(sector: &Sector) -> Vec<MomentumBlock> {
    let m = sector.m;
    let mut seen = std::collections::BTreeMap::new();
    for &s in &sector.states {
        let (r, p) = orbit(s, m);
        seen.insert(r, p);
    }
    (0..m)
        .map(|j| {
            let (reps, periods): (Vec<u32>, Vec<usize>) = seen
                .iter()
                .filter(|(_, &p)| (j * p) % m == 0)
                .map(|(&r, &p)| (r, p))
                .unzip();
            MomentumBlock {
                two_sz: sector.two_sz,
                j,
                m,
                reps,
                periods,
            }
        })
        .collect()
}

/// The finite symmetries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    /// Total spin S^z (diagonal).
    Sz,
    /// Spin reversal: flips every spin.
    Reversal,
    /// Parity: the product of all sigma^z, `(-1)^{#down}`.
    Parity,
    /// Translation by one site.
    Shift,
}

/// Exact action on a full-space vector.
pub fn apply_symmetry(op: Symmetry, v: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for (s, &x) in v.iter().enumerate() {
        let s = s as u32;
        match op {
            Symmetry::Sz => out[s as usize] = x * (two_sz_of(s, m) as f64 / 2.0),
            Symmetry::Reversal => out[reverse_state(s, m) as usize] = x,
            Symmetry::Parity => {
                out[s as usize] = if s.count_ones().is_multiple_of(2) {
                    x
                } else {
                    -x
                };
            }
            Symmetry::Shift => out[shift_state(s, m) as usize] = x,
        }
    }
    out
}

/// Basis vector of the full space.
pub fn unit_state(mask: u32, m: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << m];
    v[mask as usize] = Complex64::new(1.0, 0.0);
    v
}

/// Parses a spin string such as `"uudu"` or `"↑↑↓↑"` (site 0 first).
pub fn state_from_str(s: &str) -> Option<u32> {
    let mut mask = 0u32;
    for (i, ch) in s.chars().enumerate() {
        match ch {
            'u' | '↑' => {}
            'd' | '↓' => mask |= 1 << i,
            _ => return None,
        }
    }
    Some(mask)
}
