//! Simultaneous diagonalisation of the commuting family on momentum blocks, eigenvalue
//! polynomials of the auxiliary matrices, and the classification of their zeroes.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{random_mu, random_z};
use crate::lattice::{
    all_two_sz, enumerate_sector, momentum_blocks, ModelParams, MomentumBlock, Sector,
};
use crate::numerics::{eig_dense, interpolate, poly_roots, vec_norm, CMatrix, CPoly, ABS_FLOOR};
use crate::vertexops::{block_matrix, interpolation_nodes, q_lax, transfer_lax, MuParam};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Relative tolerance for matching roots between probes, orbits and partners.
pub const ROOT_MATCH_TOL: f64 = 1e-6;
/// Relative tolerance for grouping transfer eigenvalue polynomials.
pub const MULTIPLET_TOL: f64 = 1e-7;
/// Coefficients below this fraction of the largest are treated as zero.
pub const COEFF_ZERO_TOL: f64 = 1e-9;

/// Knobs for a spectrum run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumConfig {
    /// Generic point used for diagonalisation.
    pub mu0: MuParam,
    pub z0: Complex64,
    /// Independent point for the transfer-matrix cross-check.
    pub z1: Complex64,
    /// Probe values; the first two classify, the third breaks ties and enters the normalisation fit.
    pub probes: Vec<MuParam>,
    pub radius: f64,
    pub seed: u64,
    pub max_redraws: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            mu0: MuParam::new(Complex64::from_polar(1.37, 0.31)),
            z0: Complex64::new(0.41, 0.27),
            z1: Complex64::new(0.53, -0.38),
            probes: vec![
                MuParam::real(1.3),
                MuParam::new(Complex64::from_polar(0.8, 0.4)),
                MuParam::new(Complex64::from_polar(1.15, -0.7)),
            ],
            radius: 0.83,
            seed: 42,
            max_redraws: 5,
        }
    }
}

/// Eigenvectors of one momentum block, in block coordinates (unit norm).
#[derive(Debug, Clone)]
pub struct BlockEigenbasis {
    pub two_sz: i32,
    pub j: usize,
    pub vectors: Vec<Vec<Complex64>>,
    pub mu0: MuParam,
    pub z0: Complex64,
    pub redraws: usize,
}

fn min_relative_gap(values: &[Complex64]) -> f64 {
    let scale = values
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
        .max(ABS_FLOOR);
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in 0..i {
            gap = gap.min((values[i] - values[j]).norm() / scale);
        }
    }
    gap
}

/// Normwise eigen-residual `|Av - theta v| / (|A|_F |v|)` with `theta` read off from the
/// largest component of `v`.
pub fn eigen_residual(a: &CMatrix, v: &[Complex64]) -> (Complex64, f64) {
    let av = a.matvec(v);
    let (i, _) =
        v.iter().enumerate().fold(
            (0, 0.0),
            |acc, (i, x)| if x.norm() > acc.1 { (i, x.norm()) } else { acc },
        );
    let theta = av[i] / v[i];
    let r: f64 = av
        .iter()
        .zip(v)
        .map(|(x, y)| (x - theta * y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den = (a.frobenius() * vec_norm(v)).max(1e-300);
    (theta, r / den)
}

/// Eigenvectors of `Q_{mu0}(z0)` on a momentum block, cross-checked against `T~(z1)`.
/// Near-degenerate spectra or failed cross-checks trigger a redraw of `(mu0, z0)`.
pub fn common_eigenbasis(
    block: &MomentumBlock,
    params: &ModelParams,
    cfg: &SpectrumConfig,
    rng: &mut ChaCha8Rng,
) -> Result<BlockEigenbasis> {
    let dim = block.dim();
    let t1 = block_matrix(&transfer_lax(cfg.z1, params.q, true)?, block);
    let (mut mu0, mut z0) = (cfg.mu0, cfg.z0);
    for attempt in 0..=cfg.max_redraws {
        if attempt > 0 {
            mu0 = random_mu(rng);
            z0 = random_z(rng);
        }
        if dim == 0 {
            return Ok(BlockEigenbasis {
                two_sz: block.two_sz,
                j: block.j,
                vectors: vec![],
                mu0,
                z0,
                redraws: 0,
            });
        }
        let a = block_matrix(&q_lax(mu0, z0, params), block);
        if a.frobenius() == 0.0 && dim > 1 {
            continue;
        }
        let eig = match eig_dense(&a) {
            Ok(e) => e,
            Err(_) => continue,
        };
        if dim > 1 && min_relative_gap(&eig.values) < 1e-8 {
            continue;
        }
        let mut vectors = Vec::with_capacity(dim);
        let mut ok = true;
        for c in 0..dim {
            let mut v = eig.vector(c);
            let n = vec_norm(&v);
            v.iter_mut().for_each(|x| *x /= n);
            let (_, rq) = eigen_residual(&a, &v);
            let (_, rt) = eigen_residual(&t1, &v);
            if rq > 1e-9 || rt > 1e-7 {
                ok = false;
                break;
            }
            vectors.push(v);
        }
        if ok {
            return Ok(BlockEigenbasis {
                two_sz: block.two_sz,
                j: block.j,
                vectors,
                mu0,
                z0,
                redraws: attempt,
            });
        }
    }
    Err(Error::PersistentDegeneracy {
        redraws: cfg.max_redraws,
        dim,
    })
}

/// Which operator an eigenvalue polynomial is taken of.
#[derive(Debug, Clone, Copy)]
pub enum FamilyOp {
    Q(MuParam),
    /// `T~(z) = (1 - zq^2)^M T(z)`.
    TransferNormalized,
}

/// Eigenvalue polynomials for several eigenvectors of one block, from the block matrices at
/// `M+1` circle nodes. Each node value must pass a `1e-8` eigen-residual. An eigenvalue that
/// vanishes to rounding at every node gives the zero polynomial.
pub fn block_eigenpolys(
    vectors: &[Vec<Complex64>],
    op: FamilyOp,
    block: &MomentumBlock,
    params: &ModelParams,
    radius: f64,
) -> Result<Vec<CPoly>> {
    let nodes = interpolation_nodes(params.m, radius);
    let mats: Vec<CMatrix> = nodes
        .iter()
        .map(|&z| {
            Ok(match op {
                FamilyOp::Q(mu) => block_matrix(&q_lax(mu, z, params), block),
                FamilyOp::TransferNormalized => {
                    block_matrix(&transfer_lax(z, params.q, true)?, block)
                }
            })
        })
        .collect::<Result<_>>()?;
    vectors
        .iter()
        .map(|v| {
            let mut samples = Vec::with_capacity(nodes.len());
            let mut vanishing = true;
            for (z, a) in nodes.iter().zip(&mats) {
                let (theta, r) = eigen_residual(a, v);
                if r > 1e-8 {
                    return Err(Error::NotEigenvector(r));
                }
                vanishing &= theta.norm() <= ABS_FLOOR * a.frobenius();
                samples.push((*z, theta));
            }
            if vanishing {
                return Ok(CPoly::zero());
            }
            interpolate(&samples, params.m)
        })
        .collect()
}

/// Eigenvalue polynomial `Lambda_mu(z)` of a single block eigenvector.
pub fn eigenvalue_poly(
    v: &[Complex64],
    mu: MuParam,
    block: &MomentumBlock,
    params: &ModelParams,
    radius: f64,
) -> Result<CPoly> {
    Ok(block_eigenpolys(&[v.to_vec()], FamilyOp::Q(mu), block, params, radius)?.remove(0))
}

/// A complete string: a full `q^2`-orbit of `N'` zeroes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StringCentre {
    /// Orbit member in the limit `mu -> 1`.
    pub centre: Complex64,
    /// `centre^{N'}`, independent of the member chosen.
    pub power: Complex64,
    /// True when the centre moves as `mu^2`, false when it is constant.
    pub scaling: bool,
}

/// Zero structure `Lambda_mu(z) = N_mu z^{n_inf} P_B(z) P_mu(z) P_S(z^{N'})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroData {
    pub probes: Vec<Complex64>,
    pub degree: usize,
    pub n_inf: usize,
    /// `M - degree`, the number of zeroes at the origin of the `q -> q^-1` partner.
    pub n_inf_partner: usize,
    pub bethe_roots: Vec<Complex64>,
    /// Zeroes `z_B mu^2` at the first probe.
    pub mu_roots: Vec<Complex64>,
    pub strings: Vec<StringCentre>,
    /// Leading coefficients `N_mu` at each probe.
    pub norms: Vec<Complex64>,
}

impl ZeroData {
    pub fn n_b(&self) -> usize {
        self.bethe_roots.len()
    }

    pub fn n_s(&self) -> usize {
        self.strings.len()
    }

    pub fn n_s_scaling(&self) -> usize {
        self.strings.iter().filter(|s| s.scaling).count()
    }

    /// Predicted exponent `-M/2 - n_B - N' n_S'` in `N_mu ~ mu^e`.
    pub fn expected_norm_exponent(&self, params: &ModelParams) -> f64 {
        -(params.m as f64) / 2.0 - self.n_b() as f64 - (params.n_prime * self.n_s_scaling()) as f64
    }

    /// Least-squares slope of `ln|N_mu|` against `ln|mu|` over the probes.
    pub fn fitted_norm_exponent(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .probes
            .iter()
            .zip(&self.norms)
            .map(|(m, n)| (m.norm().ln(), n.norm().ln()))
            .collect();
        let k = pts.len() as f64;
        if pts.len() < 2 {
            return None;
        }
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if sxx < 1e-12 {
            return None;
        }
        Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
    }

    /// Monic `P_B`.
    pub fn p_b(&self) -> CPoly {
        CPoly::from_roots(&self.bethe_roots)
    }

    /// Monic string polynomial in `u = z^{N'}` at `mu -> 1`.
    pub fn p_s_limit(&self) -> CPoly {
        let p: Vec<Complex64> = self.strings.iter().map(|s| s.power).collect();
        CPoly::from_roots(&p)
    }
}

fn rel_close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1e-300)
}

/// Greedy multiset matching; returns `perm[i]` = index in `b` matched to `a[i]`.
pub fn match_multisets(a: &[Complex64], b: &[Complex64], tol: f64) -> Option<Vec<usize>> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut perm = Vec::with_capacity(a.len());
    for x in a {
        let best = b
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, y)| (i, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))?;
        if !rel_close(*x, b[best.0], tol) {
            return None;
        }
        used[best.0] = true;
        perm.push(best.0);
    }
    Some(perm)
}

/// Splits a multiset of zeroes into complete `q^2`-orbits of length `N'` (one member each)
/// and the remainder.
pub fn extract_strings(
    roots: &[Complex64],
    q: Complex64,
    n_prime: usize,
    tol: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let q2 = q * q;
    let mut used = vec![false; roots.len()];
    let mut centres = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let x = roots[i];
        let mut members = vec![i];
        let mut tmp_used = used.clone();
        tmp_used[i] = true;
        for l in 1..n_prime {
            let target = x * q2.powi(l as i32);
            let hit = (0..roots.len())
                .filter(|&k| !tmp_used[k] && rel_close(roots[k], target, tol))
                .min_by(|&a, &b| {
                    (roots[a] - target)
                        .norm()
                        .total_cmp(&(roots[b] - target).norm())
                });
            match hit {
                Some(k) => {
                    tmp_used[k] = true;
                    members.push(k);
                }
                None => break,
            }
        }
        if members.len() == n_prime {
            used = tmp_used;
            centres.push(x);
        }
    }
    let rest = roots
        .iter()
        .zip(&used)
        .filter(|(_, &u)| !u)
        .map(|(r, _)| *r)
        .collect();
    (centres, rest)
}

/// Strips zero coefficients at both ends; returns `(n_inf, degree, stripped)`.
fn strip(p: &CPoly) -> Option<(usize, usize, CPoly)> {
    let t = p.trimmed(COEFF_ZERO_TOL);
    let deg = t.degree()?;
    let tol = COEFF_ZERO_TOL * t.max_abs_coeff();
    let low = t.coeffs().iter().take_while(|c| c.norm() <= tol).count();
    Some((low, deg, CPoly::new(t.coeffs()[low..].to_vec())))
}

fn nonzero_roots(p: &CPoly) -> Result<(usize, Vec<Complex64>)> {
    if p.degree().unwrap_or(0) == 0 {
        return Ok((0, vec![]));
    }
    let roots = poly_roots(p)?.expanded();
    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    let zeros = roots.iter().filter(|r| r.norm() < 1e-7 * scale).count();
    Ok((
        zeros,
        roots
            .into_iter()
            .filter(|r| r.norm() >= 1e-7 * scale)
            .collect(),
    ))
}

/// Decomposes eigenvalue polynomials at two or more probe values of `mu` into infinite and
/// finite Bethe roots, their `mu^2` partners, and complete strings.
pub fn classify_zeroes(lambdas: &[(MuParam, CPoly)], params: &ModelParams) -> Result<ZeroData> {
    if lambdas.len() < 2 {
        return Err(Error::InvalidParams(
            "classification needs two probes".into(),
        ));
    }
    let mut info = Vec::new();
    for (mu, p) in lambdas {
        let (low, deg, s) =
            strip(p).ok_or_else(|| Error::Classification("vanishing eigenvalue".into()))?;
        let (extra, roots) = nonzero_roots(&s)?;
        info.push((*mu, low + extra, deg, roots, s.leading()));
    }
    let (mu1, n_inf, degree, r1, _) = info[0].clone();
    for (_, ni, d, _, _) in &info[1..] {
        if *ni != n_inf || *d != degree {
            return Err(Error::Classification(format!(
                "zero count differs between probes: (n_inf, deg) = ({n_inf}, {degree}) vs ({ni}, {d})"
            )));
        }
    }
    let (mu2, r2) = (info[1].0, &info[1].3);
    let s2 = (mu2.value / mu1.value).powi(2);
    let nearest = |set: &[Complex64], x: Complex64| -> Option<Complex64> {
        set.iter()
            .copied()
            .min_by(|a, b| (a - x).norm().total_cmp(&(b - x).norm()))
    };
    let mut constant = Vec::new();
    let mut scaling = Vec::new();
    for &x in &r1 {
        let c = nearest(r2, x).is_some_and(|y| rel_close(x, y, ROOT_MATCH_TOL));
        let s = nearest(r2, x * s2).is_some_and(|y| rel_close(x * s2, y, ROOT_MATCH_TOL));
        let kind = match (c, s) {
            (true, false) => false,
            (false, true) => true,
            (true, true) => {
                let (mu3, r3) = info.get(2).map(|i| (i.0, i.3.clone())).ok_or_else(|| {
                    Error::Classification(format!("ambiguous trajectory for root {x}"))
                })?;
                let s3 = (mu3.value / mu1.value).powi(2);
                let c3 = nearest(&r3, x).is_some_and(|y| rel_close(x, y, ROOT_MATCH_TOL));
                let sc3 =
                    nearest(&r3, x * s3).is_some_and(|y| rel_close(x * s3, y, ROOT_MATCH_TOL));
                match (c3, sc3) {
                    (true, false) => false,
                    (false, true) => true,
                    _ => {
                        return Err(Error::Classification(format!(
                            "ambiguous trajectory for root {x}"
                        )))
                    }
                }
            }
            (false, false) => {
                return Err(Error::Unclassifiable {
                    first: x,
                    second: nearest(r2, x).unwrap_or(ZERO),
                })
            }
        };
        if kind {
            scaling.push(x);
        } else {
            constant.push(x);
        }
    }
    let predicted: Vec<Complex64> = constant
        .iter()
        .copied()
        .chain(scaling.iter().map(|x| x * s2))
        .collect();
    if match_multisets(&predicted, r2, ROOT_MATCH_TOL).is_none() {
        return Err(Error::Classification(
            "root trajectories do not pair up between probes".into(),
        ));
    }
    let mu1_sq = mu1.value * mu1.value;
    let base: Vec<Complex64> = scaling.iter().map(|x| x / mu1_sq).collect();
    let (c_str, c_rest) = extract_strings(&constant, params.q, params.n_prime, ROOT_MATCH_TOL);
    let (s_str, s_rest) = extract_strings(&base, params.q, params.n_prime, ROOT_MATCH_TOL);
    let perm = match_multisets(&c_rest, &s_rest, ROOT_MATCH_TOL).ok_or_else(|| {
        Error::Classification(format!(
            "{} constant non-string zeroes vs {} mu^2-scaling non-string zeroes",
            c_rest.len(),
            s_rest.len()
        ))
    })?;
    let mu_roots = perm.iter().map(|&i| s_rest[i] * mu1_sq).collect();
    let np = params.n_prime as i32;
    let strings: Vec<StringCentre> = c_str
        .iter()
        .map(|&c| StringCentre {
            centre: c,
            power: c.powi(np),
            scaling: false,
        })
        .chain(s_str.iter().map(|&c| StringCentre {
            centre: c,
            power: c.powi(np),
            scaling: true,
        }))
        .collect();
    let z = ZeroData {
        probes: info.iter().map(|i| i.0.value).collect(),
        degree,
        n_inf,
        n_inf_partner: params.m - degree,
        bethe_roots: c_rest,
        mu_roots,
        strings,
        norms: info.iter().map(|i| i.4).collect(),
    };
    if degree != z.n_inf + 2 * z.n_b() + z.n_s() * params.n_prime {
        return Err(Error::Classification(format!(
            "degree {degree} != n_inf {} + 2 n_B {} + n_S {} N'",
            z.n_inf,
            z.n_b(),
            z.n_s()
        )));
    }
    Ok(z)
}

/// One simultaneous eigenvector with its spectral data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigPoly {
    pub two_sz: i32,
    /// Momentum index: the shift eigenvalue is `e^{-2 pi i j/M}`.
    pub j: usize,
    pub k: f64,
    /// Eigenvalue of `T(1)`, the shift.
    pub t_one: Complex64,
    /// Unit vector in the sector basis, phase fixed so the largest entry is real positive.
    pub vector: Vec<Complex64>,
    /// Invariant under complex conjugation.
    pub real: bool,
    /// Eigenvalue polynomial of `T~(z)`.
    pub t_poly: CPoly,
    pub lambdas: Vec<CPoly>,
    pub zeros: Option<ZeroData>,
    pub classification_error: Option<String>,
    /// `N_{mu q} / N_mu` at the first probe.
    pub norm_q_ratio: Option<Complex64>,
}

/// Analyses every eigenvector of one momentum block.
pub fn analyze_block(
    block: &MomentumBlock,
    sector: &Sector,
    params: &ModelParams,
    cfg: &SpectrumConfig,
) -> Result<Vec<EigPoly>> {
    if block.dim() == 0 {
        return Ok(vec![]);
    }
    let salt = ((block.two_sz + 64) as u64) << 16 | block.j as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let basis = common_eigenbasis(block, params, cfg, &mut rng)?;
    let t_polys = block_eigenpolys(
        &basis.vectors,
        FamilyOp::TransferNormalized,
        block,
        params,
        cfg.radius,
    )?;
    let mut lambda_sets = Vec::new();
    for mu in &cfg.probes {
        lambda_sets.push(block_eigenpolys(
            &basis.vectors,
            FamilyOp::Q(*mu),
            block,
            params,
            cfg.radius,
        )?);
    }
    let shifted = block_eigenpolys(
        &basis.vectors,
        FamilyOp::Q(cfg.probes[0].times_q(1, params)),
        block,
        params,
        cfg.radius,
    )?;
    let iso = block.isometry(sector);
    let t_one = Complex64::from_polar(1.0, -block.k());
    let mut out = Vec::with_capacity(basis.vectors.len());
    for (c, v) in basis.vectors.iter().enumerate() {
        let mut full = iso.matvec(v);
        let big = full
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(ZERO);
        let ph = big.conj() / big.norm().max(1e-300);
        let n = vec_norm(&full);
        full.iter_mut().for_each(|x| *x *= ph / n);
        let real = full.iter().map(|x| x.im.abs()).fold(0.0, f64::max) <= 1e-8;
        let lambdas: Vec<CPoly> = lambda_sets.iter().map(|s| s[c].clone()).collect();
        let pairs: Vec<(MuParam, CPoly)> = cfg
            .probes
            .iter()
            .copied()
            .zip(lambdas.iter().cloned())
            .collect();
        let (zeros, err) = match classify_zeroes(&pairs, params) {
            Ok(z) => (Some(z), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let norm_q_ratio = {
            let a = shifted[c].trimmed(COEFF_ZERO_TOL);
            let b = lambdas[0].trimmed(COEFF_ZERO_TOL);
            (!a.is_zero() && !b.is_zero()).then(|| a.leading() / b.leading())
        };
        out.push(EigPoly {
            two_sz: block.two_sz,
            j: block.j,
            k: block.k(),
            t_one,
            vector: full,
            real,
            t_poly: t_polys[c].clone(),
            lambdas,
            zeros,
            classification_error: err,
            norm_q_ratio,
        });
    }
    Ok(out)
}

/// A block that could not be analysed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockFailure {
    pub two_sz: i32,
    pub j: usize,
    pub message: String,
}

/// All eigenvectors over the requested sectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub n: usize,
    pub m: usize,
    pub q: Complex64,
    pub eigs: Vec<EigPoly>,
    pub failures: Vec<BlockFailure>,
}

impl Spectrum {
    pub fn in_block(&self, two_sz: i32, j: usize) -> impl Iterator<Item = &EigPoly> {
        self.eigs
            .iter()
            .filter(move |e| e.two_sz == two_sz && e.j == j)
    }
}

/// Full spectrum over the given sectors (all when `None`), blocks in parallel.
pub fn compute_spectrum(
    params: &ModelParams,
    cfg: &SpectrumConfig,
    sectors: Option<&[i32]>,
) -> Result<Spectrum> {
    let list: Vec<i32> = match sectors {
        Some(s) => s.to_vec(),
        None => all_two_sz(params.m),
    };
    let mut jobs = Vec::new();
    let mut secs = BTreeMap::new();
    for &s in &list {
        let sec = enumerate_sector(params, s)?;
        for b in momentum_blocks(&sec) {
            if b.dim() > 0 {
                jobs.push(b);
            }
        }
        secs.insert(s, sec);
    }
    let results: Vec<(i32, usize, Result<Vec<EigPoly>>)> = jobs
        .par_iter()
        .map(|b| {
            (
                b.two_sz,
                b.j,
                analyze_block(b, &secs[&b.two_sz], params, cfg),
            )
        })
        .collect();
    let mut eigs = Vec::new();
    let mut failures = Vec::new();
    for (two_sz, j, r) in results {
        match r {
            Ok(v) => eigs.extend(v),
            Err(e) => failures.push(BlockFailure {
                two_sz,
                j,
                message: e.to_string(),
            }),
        }
    }
    Ok(Spectrum {
        n: params.n,
        m: params.m,
        q: params.q,
        eigs,
        failures,
    })
}

/// Eigenvectors sharing one transfer-matrix eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multiplet {
    pub t_poly: CPoly,
    /// Indices into the spectrum's eigenvector list.
    pub members: Vec<usize>,
    pub dimension: usize,
    pub n_s: Option<usize>,
    /// `dimension == 2^{n_S}` with all members agreeing on `n_S`.
    pub consistent: bool,
}

/// Groups eigenvectors by coefficientwise equality of their `T~` polynomials.
pub fn group_multiplets(eigs: &[EigPoly], tol: f64) -> Vec<Multiplet> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, e) in eigs.iter().enumerate() {
        match groups
            .iter_mut()
            .find(|g| eigs[g[0]].t_poly.rel_diff(&e.t_poly) <= tol)
        {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
        .into_iter()
        .map(|members| {
            let ns: Vec<Option<usize>> = members
                .iter()
                .map(|&i| eigs[i].zeros.as_ref().map(|z| z.n_s()))
                .collect();
            let n_s = ns[0].filter(|_| ns.iter().all(|x| *x == ns[0]));
            let dimension = members.len();
            Multiplet {
                t_poly: eigs[members[0]].t_poly.clone(),
                consistent: n_s.is_some_and(|n| 1usize << n == dimension),
                members,
                dimension,
                n_s,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c64;
    use crate::vertexops::{all_up_q_poly, weight_b};

    fn blocks(n: usize, m: usize, two_sz: i32) -> (ModelParams, Sector, Vec<MomentumBlock>) {
        let p = ModelParams::new(n, m).unwrap();
        let s = enumerate_sector(&p, two_sz).unwrap();
        let b = momentum_blocks(&s);
        (p, s, b)
    }

    #[test]
    fn all_up_block_is_trivial() {
        let (p, s, b) = blocks(3, 6, 6);
        let cfg = SpectrumConfig::default();
        let e = analyze_block(&b[0], &s, &p, &cfg).unwrap();
        assert_eq!(e.len(), 1);
        assert!((e[0].vector[0].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvector_count_matches_block_dimension() {
        let (p, _, b) = blocks(3, 4, 0);
        let cfg = SpectrumConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for blk in &b {
            let e = common_eigenbasis(blk, &p, &cfg, &mut rng).unwrap();
            assert_eq!(e.vectors.len(), blk.dim());
        }
    }

    #[test]
    fn all_up_polynomial_matches_closed_form() {
        let (p, _, b) = blocks(3, 6, 6);
        let mu = MuParam::new(c64(0.9, 0.35));
        let lam = eigenvalue_poly(&[c64(1.0, 0.0)], mu, &b[0], &p, 0.83).unwrap();
        assert!(lam.rel_diff(&all_up_q_poly(mu, &p)) < 1e-11);
        assert!(lam.degree().unwrap() <= 6);
    }

    #[test]
    fn all_up_near_mu_one_is_vacuum_string_poly() {
        // z^6 - 20 z^3 mu^3 + mu^6 at mu close to one
        let (p, _, b) = blocks(3, 6, 6);
        let mu = MuParam::real(1.0 + 1e-7);
        let lam = eigenvalue_poly(&[c64(1.0, 0.0)], mu, &b[0], &p, 0.83)
            .unwrap()
            .monic();
        let want = CPoly::from_real(&[1.0, 0.0, 0.0, -20.0, 0.0, 0.0, 1.0]);
        assert!(lam.rel_diff(&want) < 1e-5, "{lam:?}");
    }

    #[test]
    fn extract_strings_splits_orbits() {
        let p = ModelParams::new(3, 3).unwrap();
        let q = p.q;
        let x = c64(0.7, 0.2);
        let y = c64(-1.3, 0.5);
        let roots = vec![x, y, x * q * q, x * q.powi(4)];
        let (c, rest) = extract_strings(&roots, q, 3, 1e-9);
        assert_eq!(c.len(), 1);
        assert_eq!(rest, vec![y]);
    }

    #[test]
    fn vacuum_quartet_classification() {
        let p = ModelParams::new(3, 6).unwrap();
        let cfg = SpectrumConfig::default();
        let sp = compute_spectrum(&p, &cfg, Some(&[6, 0, -6])).unwrap();
        assert!(sp.failures.is_empty(), "{:?}", sp.failures);
        let a_plus = 10.0 + 3.0 * 11f64.sqrt();
        let a_minus = 10.0 - 3.0 * 11f64.sqrt();
        let z = c64(0.37, 0.2);
        let vac =
            (c64(1.0, 0.0) + weight_b(z, p.q).powi(6)) * (c64(1.0, 0.0) - z * p.q * p.q).powi(6);
        let quartet: Vec<&EigPoly> = sp
            .eigs
            .iter()
            .filter(|e| (e.t_poly.eval(z) - vac).norm() < 1e-8)
            .collect();
        assert_eq!(quartet.len(), 4);
        let mut forms = Vec::new();
        for e in &quartet {
            let zd = e.zeros.as_ref().unwrap();
            assert_eq!((zd.n_inf, zd.n_b(), zd.n_s()), (0, 0, 2));
            let mut f: Vec<(bool, f64)> =
                zd.strings.iter().map(|s| (s.scaling, s.power.re)).collect();
            f.sort_by(|a, b| a.1.total_cmp(&b.1));
            for s in &zd.strings {
                let v = s.power.re;
                assert!(s.power.im.abs() < 1e-8);
                assert!((v - a_plus).abs() < 1e-7 * a_plus || (v - a_minus).abs() < 1e-7);
            }
            forms.push((e.two_sz, f.iter().map(|x| x.0).collect::<Vec<_>>()));
        }
        forms.sort();
        assert_eq!(
            forms,
            vec![
                (-6, vec![false, false]),
                (0, vec![false, true]),
                (0, vec![true, false]),
                (6, vec![true, true])
            ]
        );
    }

    #[test]
    fn multiplets_m5() {
        let p = ModelParams::new(3, 5).unwrap();
        let sp = compute_spectrum(&p, &SpectrumConfig::default(), None).unwrap();
        assert!(sp.failures.is_empty(), "{:?}", sp.failures);
        let ms = group_multiplets(&sp.eigs, MULTIPLET_TOL);
        let sectors = |m: &Multiplet| {
            let mut s: Vec<i32> = m.members.iter().map(|&i| sp.eigs[i].two_sz).collect();
            s.sort();
            s
        };
        let doublets: Vec<&Multiplet> = ms.iter().filter(|m| sectors(m) == vec![-3, 3]).collect();
        assert_eq!(doublets.len(), 5);
        for d in doublets {
            assert!(d.consistent);
            assert_eq!(d.n_s, Some(1));
        }
        assert_eq!(ms.iter().map(|m| m.dimension).sum::<usize>(), 32);
    }

    #[test]
    fn probes_agree_and_norm_exponent_fits() {
        let p = ModelParams::new(3, 4).unwrap();
        let sp = compute_spectrum(&p, &SpectrumConfig::default(), None).unwrap();
        for e in &sp.eigs {
            let z = e.zeros.as_ref().expect("classified");
            let fit = z.fitted_norm_exponent().unwrap();
            assert!(
                (fit - z.expected_norm_exponent(&p)).abs() < 1e-6,
                "{fit} {z:?}"
            );
        }
    }
}
