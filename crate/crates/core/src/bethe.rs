//! Bethe equations in denominator-free form, transfer eigenvalues rebuilt from
//! Bethe roots, momentum, sum rules, and the pairing of spectra at `q` and `1/q`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::ModelParams;
use crate::numerics::{inner, poly_divmod, poly_roots, CMatrix, CPoly, ABS_FLOOR};
use crate::spectra::{match_multisets, EigPoly, Spectrum, ZeroData, ROOT_MATCH_TOL};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Pass threshold for Bethe-equation and residue residuals.
pub const BETHE_TOL: f64 = 1e-8;
/// Pass threshold for measured against reconstructed transfer eigenvalues.
pub const TRANSFER_TOL: f64 = 1e-7;
/// Minimal overlap for two unit vectors to count as the same eigenvector.
pub const OVERLAP_TOL: f64 = 1e-6;

/// Finite Bethe roots and the number of roots at infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheData {
    pub roots: Vec<Complex64>,
    pub n_inf: usize,
}

impl BetheData {
    pub fn new(roots: Vec<Complex64>, n_inf: usize) -> Self {
        Self { roots, n_inf }
    }

    pub fn from_zeros(z: &ZeroData) -> Self {
        Self::new(z.bethe_roots.clone(), z.n_inf)
    }

    pub fn n_b(&self) -> usize {
        self.roots.len()
    }

    /// Monic `P_B(z)`.
    pub fn p_b(&self) -> CPoly {
        CPoly::from_roots(&self.roots)
    }

    /// Additive roots `u_j` with `z_j = e^{u_j} / q`, and `gamma` with `q = e^{i gamma}`.
    pub fn additive(&self, params: &ModelParams) -> (Vec<Complex64>, f64) {
        let u = self.roots.iter().map(|z| (z * params.q).ln()).collect();
        (u, params.q.arg())
    }
}

/// Phase `q^{2 n_inf + 2 n_B - M}` in front of the product side.
pub fn bethe_phase(data: &BetheData, params: &ModelParams) -> Complex64 {
    params
        .q
        .powi(2 * data.n_inf as i32 + 2 * data.n_b() as i32 - params.m as i32)
}

/// Residual of one root's equation together with the phase that would make it exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheResidual {
    pub root: Complex64,
    pub residual: f64,
    pub fitted_phase: Option<Complex64>,
}

/// Cleared form `(1 - z_j q^2)^M prod (z_j - q^2 z_k) = phase (q - z_j q)^M prod (z_j q^2 - z_k)`,
/// relative to the sum of absolute term sizes so coincident zeroes at `1` and `q^-2` stay finite.
pub fn bethe_residuals_with(
    data: &BetheData,
    phase: Complex64,
    params: &ModelParams,
) -> Vec<BetheResidual> {
    let (q, m) = (params.q, params.m as i32);
    let q2 = q * q;
    data.roots
        .iter()
        .enumerate()
        .map(|(j, &zj)| {
            let mut lhs = (ONE - zj * q2).powi(m);
            let mut core = (q - zj * q).powi(m);
            let mut scale_l = (1.0 + zj.norm()).powi(m);
            let mut scale_r = scale_l;
            for (k, &zk) in data.roots.iter().enumerate() {
                if k != j {
                    lhs *= zj - q2 * zk;
                    core *= zj * q2 - zk;
                    scale_l *= zj.norm() + zk.norm();
                    scale_r *= zj.norm() + zk.norm();
                }
            }
            let rhs = phase * core;
            let scale = (scale_l + scale_r).max(ABS_FLOOR);
            BetheResidual {
                root: zj,
                residual: (lhs - rhs).norm() / scale,
                fitted_phase: (core.norm() > ABS_FLOOR * scale).then(|| lhs / core),
            }
        })
        .collect()
}

fn bethe_system(roots: &[Complex64], phase: Complex64, params: &ModelParams) -> Vec<Complex64> {
    let (q, m) = (params.q, params.m as i32);
    let q2 = q * q;
    roots
        .iter()
        .enumerate()
        .map(|(j, &zj)| {
            let mut lhs = (ONE - zj * q2).powi(m);
            let mut core = (q - zj * q).powi(m);
            for (k, &zk) in roots.iter().enumerate() {
                if k != j {
                    lhs *= zj - q2 * zk;
                    core *= zj * q2 - zk;
                }
            }
            lhs - phase * core
        })
        .collect()
}

/// Newton refinement of the roots on the cleared equations with the default phase.
/// Roots move by at most `1e-6` relative; otherwise the input is returned unchanged.
pub fn polish_bethe_roots(data: &BetheData, params: &ModelParams) -> BetheData {
    let n = data.n_b();
    if n == 0 {
        return data.clone();
    }
    let phase = bethe_phase(data, params);
    let worst = |r: &[Complex64]| {
        bethe_residuals_with(&BetheData::new(r.to_vec(), data.n_inf), phase, params)
            .iter()
            .map(|x| x.residual)
            .fold(0.0, f64::max)
    };
    let mut z = data.roots.clone();
    let mut best = worst(&z);
    for _ in 0..8 {
        let f = bethe_system(&z, phase, params);
        let mut jac = CMatrix::zeros(n, n);
        for k in 0..n {
            let h = 1e-7 * z[k].norm().max(1e-3);
            let mut zp = z.clone();
            zp[k] += h;
            let fp = bethe_system(&zp, phase, params);
            for i in 0..n {
                jac[(i, k)] = (fp[i] - f[i]) / h;
            }
        }
        let Ok(step) = jac.solve(&f) else { break };
        let cand: Vec<Complex64> = z.iter().zip(&step).map(|(a, d)| a - d).collect();
        let r = worst(&cand);
        if r >= best {
            break;
        }
        best = r;
        z = cand;
    }
    let moved = z
        .iter()
        .zip(&data.roots)
        .all(|(a, b)| (a - b).norm() <= 1e-6 * b.norm().max(1e-3));
    if moved {
        BetheData::new(z, data.n_inf)
    } else {
        data.clone()
    }
}

/// Per-root residuals with the default phase.
pub fn bethe_residual(data: &BetheData, params: &ModelParams) -> Vec<f64> {
    bethe_residuals_with(data, bethe_phase(data, params), params)
        .into_iter()
        .map(|r| r.residual)
        .collect()
}

/// Single-root equation `1 = c ((1 - z q^2)/(1 - z))^M` in cleared form.
pub fn single_root_residual(z: Complex64, c: Complex64, params: &ModelParams) -> f64 {
    let (q, m) = (params.q, params.m as i32);
    let lhs = (ONE - z).powi(m);
    let rhs = c * (ONE - z * q * q).powi(m);
    (lhs - rhs).norm() / (2.0 * (1.0 + z.norm()).powi(m))
}

/// All solutions of `1 = c ((1 - z q^2)/(1 - z))^M`.
pub fn solve_single_root(c: Complex64, params: &ModelParams) -> Result<Vec<Complex64>> {
    let m = params.m as u32;
    let q2 = params.q * params.q;
    let a = CPoly::new(vec![ONE, -ONE]).pow(m);
    let b = CPoly::new(vec![ONE, -q2]).pow(m).scale(c);
    Ok(poly_roots(&(&a - &b))?.expanded())
}

/// The two terms of `T~(z) P_B(z)` without the overall sign:
/// `((1-z)q)^M q^{n_inf - M/2} P_B(z q^2)` and `(1 - z q^2)^M q^{M/2 - n_inf} P_B(z q^-2)`.
pub fn bethe_terms(data: &BetheData, params: &ModelParams) -> (CPoly, CPoly) {
    let (q, m) = (params.q, params.m as u32);
    let qh_m = params.q_half.powu(m);
    let pb = data.p_b();
    let left = CPoly::new(vec![q, -q])
        .pow(m)
        .scale(q.powi(data.n_inf as i32) / qh_m);
    let right = CPoly::new(vec![ONE, -q * q])
        .pow(m)
        .scale(qh_m * q.powi(-(data.n_inf as i32)));
    (
        &left * &pb.rescale_arg(q * q),
        &right * &pb.rescale_arg(q.inv() * q.inv()),
    )
}

/// `T~(z) P_B(z)` up to sign.
pub fn bethe_numerator(data: &BetheData, params: &ModelParams) -> CPoly {
    let (a, b) = bethe_terms(data, params);
    &a + &b
}

/// `lim (z - z_j) T(z)` relative to the term sizes; zero when the pole cancels.
pub fn residue_residuals(data: &BetheData, params: &ModelParams) -> Vec<f64> {
    let (a, b) = bethe_terms(data, params);
    data.roots
        .iter()
        .map(|&z| {
            let s = (a.eval_abs(z) + b.eval_abs(z)).max(ABS_FLOOR);
            (a.eval(z) + b.eval(z)).norm() / s
        })
        .collect()
}

/// Normalised transfer eigenvalue polynomial `T~(z)` rebuilt from Bethe data.
pub fn transfer_from_bethe(data: &BetheData, sign: f64, params: &ModelParams) -> Result<CPoly> {
    let num = bethe_numerator(data, params).scale(Complex64::new(sign, 0.0));
    let (quot, rem) = poly_divmod(&num, &data.p_b())?;
    let residual = rem.max_abs_coeff() / num.max_abs_coeff().max(ABS_FLOOR);
    if residual > TRANSFER_TOL {
        return Err(Error::IdentityViolation {
            name: "residue cancellation".into(),
            residual,
        });
    }
    Ok(quot)
}

/// Measured `T~` against the reconstruction; returns the better sign and its relative residual.
pub fn compare_transfer(data: &BetheData, measured: &CPoly, params: &ModelParams) -> (f64, f64) {
    let lhs = measured * &data.p_b();
    let num = bethe_numerator(data, params);
    [1.0, -1.0]
        .into_iter()
        .map(|s| (s, lhs.rel_diff(&num.scale(Complex64::new(s, 0.0)))))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

/// Sign predicted from `N_{mu q} / N_mu = q^{-M/2 - n_B - N' n_S'}`, given the measured ratio.
pub fn sign_from_norm_ratio(
    ratio: Complex64,
    n_b: usize,
    n_s_scaling: usize,
    params: &ModelParams,
) -> Complex64 {
    let pred = params.q_half.powi(-(params.m as i32))
        * params
            .q
            .powi(-(n_b as i32) - (params.n_prime * n_s_scaling) as i32);
    ratio / pred
}

/// `T(1)` from the Bethe data up to the overall sign, through the cleared form so roots at `z = 1` are allowed.
pub fn shift_from_bethe(data: &BetheData, params: &ModelParams) -> Result<Complex64> {
    let q2 = params.q * params.q;
    Ok(transfer_from_bethe(data, 1.0, params)?.eval(ONE) / (ONE - q2).powu(params.m as u32))
}

/// `(-q)^{-n_B} prod z_j^{-1}`, equal to `+-1` for real eigenvectors.
pub fn root_product_phase(data: &BetheData, params: &ModelParams) -> Complex64 {
    data.roots
        .iter()
        .fold((-params.q).powi(-(data.n_b() as i32)), |acc, z| acc / z)
}

/// Both forms of the zero-count sum rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumRule {
    /// `M - 2 n_inf - 2 n_B`.
    pub excess: i64,
    pub mod_n: bool,
    /// `M = 2 n_inf + 2 n_B + n_S N'`, checked for real eigenvectors only.
    pub exact: Option<bool>,
}

impl SumRule {
    pub fn pass(&self) -> bool {
        self.mod_n && self.exact.unwrap_or(true)
    }
}

pub fn sum_rule(n_inf: usize, n_b: usize, n_s: usize, real: bool, params: &ModelParams) -> SumRule {
    let excess = params.m as i64 - 2 * n_inf as i64 - 2 * n_b as i64;
    SumRule {
        excess,
        mod_n: excess.rem_euclid(params.n as i64) == 0,
        exact: real.then_some(excess == (n_s * params.n_prime) as i64),
    }
}

/// Invariance of the Bethe roots and string powers under `z -> 1/conj(z)`, expected for real eigenvectors.
pub fn inversion_symmetric(z: &ZeroData) -> (bool, bool) {
    let inv = |v: &[Complex64]| v.iter().map(|x| x.conj().inv()).collect::<Vec<_>>();
    let powers: Vec<Complex64> = z.strings.iter().map(|s| s.power).collect();
    (
        match_multisets(&z.bethe_roots, &inv(&z.bethe_roots), ROOT_MATCH_TOL).is_some(),
        match_multisets(&powers, &inv(&powers), ROOT_MATCH_TOL).is_some(),
    )
}

/// How one eigenvector's data transforms into its partner's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawCheck {
    pub n_inf: bool,
    pub roots: bool,
    pub strings: bool,
    pub flags: bool,
}

impl LawCheck {
    pub fn pass(&self) -> bool {
        self.n_inf && self.roots && self.strings && self.flags
    }
}

/// Partner data must carry `n_inf -> M - n_inf - 2 n_B - n_S N'` and inverted roots and powers;
/// `conjugate` additionally conjugates before inverting.
pub fn partner_laws(a: &ZeroData, b: &ZeroData, conjugate: bool) -> LawCheck {
    let t = |x: &Complex64| if conjugate { x.conj().inv() } else { x.inv() };
    let roots: Vec<Complex64> = a.bethe_roots.iter().map(t).collect();
    let pa: Vec<Complex64> = a.strings.iter().map(|s| t(&s.power)).collect();
    let pb: Vec<Complex64> = b.strings.iter().map(|s| s.power).collect();
    let strings = match_multisets(&pa, &pb, ROOT_MATCH_TOL);
    let flags = strings.as_ref().is_some_and(|perm| {
        perm.iter()
            .enumerate()
            .all(|(i, &k)| a.strings[i].scaling == b.strings[k].scaling)
    });
    LawCheck {
        n_inf: b.n_inf == a.n_inf_partner,
        roots: match_multisets(&roots, &b.bethe_roots, ROOT_MATCH_TOL).is_some(),
        strings: strings.is_some(),
        flags,
    }
}

/// One eigenvector at `q` with its counterparts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairLink {
    pub index: usize,
    /// Same eigenvector in the spectrum at `1/q`.
    pub partner: Option<usize>,
    pub overlap: f64,
    /// Eigenvector at `q` proportional to the complex conjugate, in the opposite momentum block.
    pub conjugate: Option<usize>,
    pub laws: Option<LawCheck>,
    pub conjugate_laws: Option<LawCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub links: Vec<PairLink>,
    /// Eigenvectors at `q` with no counterpart at `1/q`.
    pub unmatched: Vec<usize>,
}

impl Pairing {
    pub fn complete(&self) -> bool {
        self.unmatched.is_empty() && self.links.iter().all(|l| l.conjugate.is_some())
    }

    /// All transformation laws hold wherever both sides were classified.
    pub fn laws_hold(&self) -> bool {
        self.links.iter().all(|l| {
            l.laws.as_ref().is_none_or(LawCheck::pass)
                && l.conjugate_laws.as_ref().is_none_or(LawCheck::pass)
        })
    }
}

fn best_overlap<'a>(
    v: &[Complex64],
    cands: impl Iterator<Item = (usize, &'a EigPoly)>,
) -> Option<(usize, f64)> {
    cands
        .map(|(i, e)| (i, inner(&e.vector, v).norm()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .filter(|(_, o)| *o >= 1.0 - OVERLAP_TOL)
}

/// Matches each eigenvector at `q` with the same vector at `1/q` and with its conjugate at `q`.
pub fn pair_spectra(at_q: &Spectrum, at_q_inv: &Spectrum) -> Pairing {
    let m = at_q.m;
    let mut links = Vec::with_capacity(at_q.eigs.len());
    let mut unmatched = Vec::new();
    for (i, e) in at_q.eigs.iter().enumerate() {
        let same = at_q_inv
            .eigs
            .iter()
            .enumerate()
            .filter(|(_, f)| f.two_sz == e.two_sz && f.j == e.j);
        let partner = best_overlap(&e.vector, same);
        let cv: Vec<Complex64> = e.vector.iter().map(|x| x.conj()).collect();
        let jc = (m - e.j) % m;
        let conj_cands = at_q
            .eigs
            .iter()
            .enumerate()
            .filter(|(_, f)| f.two_sz == e.two_sz && f.j == jc);
        let conjugate = best_overlap(&cv, conj_cands).map(|p| p.0);
        if partner.is_none() {
            unmatched.push(i);
        }
        let laws = partner.and_then(|(p, _)| {
            Some(partner_laws(
                e.zeros.as_ref()?,
                at_q_inv.eigs[p].zeros.as_ref()?,
                false,
            ))
        });
        let conjugate_laws = conjugate.and_then(|c| {
            Some(partner_laws(
                e.zeros.as_ref()?,
                at_q.eigs[c].zeros.as_ref()?,
                true,
            ))
        });
        links.push(PairLink {
            index: i,
            partner: partner.map(|p| p.0),
            overlap: partner.map_or(0.0, |p| p.1),
            conjugate,
            laws,
            conjugate_laws,
        });
    }
    Pairing { links, unmatched }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c64;
    use crate::spectra::{compute_spectrum, SpectrumConfig};

    #[test]
    fn no_roots_is_vacuous() {
        let p = ModelParams::new(3, 6).unwrap();
        assert!(bethe_residual(&BetheData::new(vec![], 0), &p).is_empty());
    }

    #[test]
    fn m8_zero_momentum_root() {
        let p = ModelParams::new(3, 8).unwrap();
        let d = BetheData::new(vec![-p.q * p.q], 0);
        assert!(bethe_residual(&d, &p)[0] <= BETHE_TOL);
    }

    #[test]
    fn m5_single_root_solutions() {
        let p = ModelParams::new(3, 5).unwrap();
        // default phase q^{2-5} for one root and no roots at infinity
        let c = p.q.powi(-3).inv() * p.q.powi(5).inv();
        for z in solve_single_root(c, &p).unwrap() {
            let d = BetheData::new(vec![z], 0);
            assert!(bethe_residual(&d, &p)[0] <= BETHE_TOL, "{z}");
            assert!(single_root_residual(z, c, &p) <= BETHE_TOL);
        }
    }

    #[test]
    fn coincident_zeroes_stay_finite() {
        let p = ModelParams::new(3, 6).unwrap();
        let d = BetheData::new(vec![c64(1.0, 0.0), p.q.inv() * p.q.inv()], 0);
        assert!(bethe_residual(&d, &p).iter().all(|r| r.is_finite()));
    }

    #[test]
    fn vacuum_transfer_is_one_plus_b6() {
        let p = ModelParams::new(3, 6).unwrap();
        let t = transfer_from_bethe(&BetheData::new(vec![], 0), 1.0, &p).unwrap();
        // T~ = (1 - z q^2)^6 + ((1 - z) q)^6 for the vacuum
        let want = &CPoly::new(vec![ONE, -p.q * p.q]).pow(6) + &CPoly::new(vec![p.q, -p.q]).pow(6);
        assert!(t.rel_diff(&want) <= 1e-12);
    }

    #[test]
    fn sum_rule_examples() {
        let p6 = ModelParams::new(3, 6).unwrap();
        assert!(sum_rule(0, 0, 2, true, &p6).pass());
        let p5 = ModelParams::new(3, 5).unwrap();
        assert!(sum_rule(0, 1, 1, true, &p5).pass());
        let p8 = ModelParams::new(3, 8).unwrap();
        assert!(sum_rule(0, 1, 2, true, &p8).pass());
        assert!(!sum_rule(1, 1, 2, true, &p8).pass());
    }

    #[test]
    fn m6_spectrum_reconstructs_and_pairs() {
        let p = ModelParams::new(3, 6).unwrap();
        let cfg = SpectrumConfig::default();
        let a = compute_spectrum(&p, &cfg, None).unwrap();
        let b = compute_spectrum(&p.inverted(), &cfg, None).unwrap();
        for e in &a.eigs {
            let Some(z) = &e.zeros else { continue };
            let d = BetheData::from_zeros(z);
            assert!(bethe_residual(&d, &p).iter().all(|r| *r <= BETHE_TOL));
            assert!(residue_residuals(&d, &p).iter().all(|r| *r <= BETHE_TOL));
            let (_, r) = compare_transfer(&d, &e.t_poly, &p);
            assert!(r <= TRANSFER_TOL, "{r}");
            let s = shift_from_bethe(&d, &p).unwrap();
            assert!((s - e.t_one).norm().min((s + e.t_one).norm()) <= 1e-8);
            if e.real {
                assert!(sum_rule(z.n_inf, z.n_b(), z.n_s(), true, &p).pass());
                assert_eq!(inversion_symmetric(z), (true, true));
            }
        }
        let pairing = pair_spectra(&a, &b);
        assert!(pairing.complete());
        assert!(pairing.laws_hold());
    }
}
