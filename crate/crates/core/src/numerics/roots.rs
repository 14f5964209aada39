//! Simultaneous root finding (Aberth-Ehrlich) with a companion-matrix fallback
//! and multiplicity-aware clustering.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{eig_dense, CMatrix, CPoly};
use crate::error::{Error, Result};

/// Roots with multiplicities.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<(Complex64, usize)>,
}

impl RootSet {
    pub fn total(&self) -> usize {
        self.roots.iter().map(|r| r.1).sum()
    }

    /// Each root repeated according to its multiplicity.
    pub fn expanded(&self) -> Vec<Complex64> {
        self.roots
            .iter()
            .flat_map(|&(z, m)| std::iter::repeat_n(z, m))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Roots closer than this (relative) are merged.
    pub cluster_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            cluster_tol: 1e-7,
            max_iter: 600,
        }
    }
}

pub fn poly_roots(p: &CPoly) -> Result<RootSet> {
    poly_roots_with(p, RootOptions::default())
}

pub fn poly_roots_with(p: &CPoly, opts: RootOptions) -> Result<RootSet> {
    let deg = p.degree().unwrap_or(0);
    if deg == 0 {
        return Err(Error::DegreeTooLow(deg));
    }
    let p = p.scale(p.leading().inv());
    // Exact zero roots are split off first; they are common (n_inf) and Aberth handles them poorly.
    let zeros = p.coeffs().iter().take_while(|c| c.norm() == 0.0).count();
    let core = CPoly::new(p.coeffs()[zeros..].to_vec());
    let mut found: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); zeros];
    if core.degree().unwrap_or(0) > 0 {
        let approx = match aberth(&core, opts.max_iter) {
            Some(z) => z,
            None => companion_roots(&core).map_err(|_| Error::RootsNotConverged {
                iterations: opts.max_iter,
                degree: deg,
                coeffs: p.coeffs().to_vec(),
            })?,
        };
        found.extend(approx.into_iter().map(|z| newton_polish(&core, z)));
    }
    Ok(cluster(&p, found, opts.cluster_tol))
}

/// Initial guesses from the upper convex hull of `(k, log|a_k|)` (Newton polygon).
fn initial_guesses(p: &CPoly) -> Vec<Complex64> {
    let c = p.coeffs();
    let n = c.len() - 1;
    let pts: Vec<(usize, f64)> = c
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 0.0)
        .map(|(k, a)| (k, a.norm().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross =
                (b.0 as f64 - a.0 as f64) * (pt.1 - a.1) - (b.1 - a.1) * (pt.0 as f64 - a.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let mut out = Vec::with_capacity(n);
    for w in hull.windows(2) {
        let (i, j) = (w[0].0, w[1].0);
        let k = j - i;
        let r = ((w[0].1 - w[1].1) / k as f64).exp();
        for t in 0..k {
            let ang = 2.0 * std::f64::consts::PI * (t as f64) / (k as f64)
                + 2.0 * std::f64::consts::PI * (i as f64) / (n as f64)
                + 0.4;
            out.push(Complex64::from_polar(r, ang));
        }
    }
    out
}

fn eval_with_derivative(p: &CPoly, z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &c in p.coeffs().iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

fn aberth(p: &CPoly, max_iter: usize) -> Option<Vec<Complex64>> {
    let n = p.degree()?;
    let mut z = initial_guesses(p);
    if n == 1 {
        return Some(vec![-p.coeff(0) / p.coeff(1)]);
    }
    let mut done = vec![false; n];
    let eps = f64::EPSILON;
    for _ in 0..max_iter {
        let mut all = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (v, d) = eval_with_derivative(p, z[i]);
            if v.norm() <= 4.0 * (n as f64) * eps * p.eval_abs(z[i]) {
                done[i] = true;
                continue;
            }
            all = false;
            let ratio = v / d;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    let diff = z[i] - z[j];
                    if diff.norm() > 0.0 {
                        s += diff.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - ratio * s;
            let step = if denom.norm() > 0.0 && d.norm() > 0.0 {
                ratio / denom
            } else {
                Complex64::new(1e-8, 1e-8) * z[i].norm().max(1.0)
            };
            z[i] -= step;
            if step.norm() <= eps * z[i].norm() {
                done[i] = true;
            }
            if !(z[i].re.is_finite() && z[i].im.is_finite()) {
                return None;
            }
        }
        if all {
            return Some(z);
        }
    }
    None
}

fn companion_roots(p: &CPoly) -> Result<Vec<Complex64>> {
    let n = p.degree().unwrap_or(0);
    let lead = p.leading();
    let mut c = CMatrix::zeros(n, n);
    for i in 1..n {
        c[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        c[(i, n - 1)] = -p.coeff(i) / lead;
    }
    Ok(eig_dense(&c)?.values)
}

/// A couple of Newton steps, accepted only if they reduce `|p|`.
fn newton_polish(p: &CPoly, mut z: Complex64) -> Complex64 {
    for _ in 0..3 {
        let (v, d) = eval_with_derivative(p, z);
        if d.norm() == 0.0 || v.norm() == 0.0 {
            break;
        }
        let cand = z - v / d;
        if p.eval(cand).norm() < v.norm() {
            z = cand;
        } else {
            break;
        }
    }
    z
}

/// Groups numerically coincident roots. Groups found within a loose probe radius are
/// accepted as multiple roots only when the derivatives vanish there as well.
fn cluster(p: &CPoly, roots: Vec<Complex64>, tol: f64) -> RootSet {
    let n = roots.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    let probe = 1e-3_f64.max(tol);
    for i in 0..n {
        for j in 0..i {
            let s = roots[i].norm().max(roots[j].norm()).max(1.0);
            if (roots[i] - roots[j]).norm() <= probe * s {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out = Vec::new();
    for (_, idx) in groups {
        if idx.len() == 1 {
            out.push((roots[idx[0]], 1));
            continue;
        }
        let m = idx.len();
        let centre: Complex64 = idx.iter().map(|&i| roots[i]).sum::<Complex64>() / m as f64;
        if let Some(c) = confirm_multiple(p, centre, m) {
            out.push((c, m));
            continue;
        }
        // Not a genuine multiple root: keep members separate unless within `tol`.
        let mut members: Vec<(Complex64, usize)> = Vec::new();
        'outer: for &i in &idx {
            for mem in members.iter_mut() {
                let s = roots[i].norm().max(mem.0.norm()).max(1.0);
                if (roots[i] - mem.0).norm() <= tol * s {
                    let k = mem.1 as f64;
                    mem.0 = (mem.0 * k + roots[i]) / (k + 1.0);
                    mem.1 += 1;
                    continue 'outer;
                }
            }
            members.push((roots[i], 1));
        }
        out.extend(members);
    }
    out.sort_by(|a, b| {
        a.0.norm()
            .total_cmp(&b.0.norm())
            .then(a.0.arg().total_cmp(&b.0.arg()))
    });
    RootSet { roots: out }
}

/// Checks that `p, p', ..., p^(m-1)` all vanish near `c`, refining `c` by Newton on `p^(m-1)`.
fn confirm_multiple(p: &CPoly, c: Complex64, m: usize) -> Option<Complex64> {
    let mut ders = vec![p.clone()];
    for _ in 0..m {
        let d = ders.last().unwrap().derivative();
        ders.push(d);
    }
    let mut c = c;
    for _ in 0..5 {
        let (v, d) = (ders[m - 1].eval(c), ders[m].eval(c));
        if d.norm() == 0.0 {
            break;
        }
        let cand = c - v / d;
        if ders[m - 1].eval(cand).norm() <= v.norm() {
            c = cand;
        } else {
            break;
        }
    }
    let ok = (0..m)
        .all(|j| ders[j].eval(c).norm() <= 1e-10 * ders[j].eval_abs(c).max(f64::MIN_POSITIVE));
    ok.then_some(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c64;

    fn has_root(rs: &RootSet, z: Complex64, mult: usize, tol: f64) -> bool {
        rs.roots
            .iter()
            .any(|&(r, m)| m == mult && (r - z).norm() <= tol * z.norm().max(1.0))
    }

    #[test]
    fn z_squared_plus_one() {
        let rs = poly_roots(&CPoly::from_real(&[1.0, 0.0, 1.0])).unwrap();
        assert_eq!(rs.total(), 2);
        assert!(has_root(&rs, c64(0.0, 1.0), 1, 1e-14));
        assert!(has_root(&rs, c64(0.0, -1.0), 1, 1e-14));
    }

    #[test]
    fn triple_root_merged() {
        let rs = poly_roots(&CPoly::from_real(&[-1.0, 3.0, -3.0, 1.0])).unwrap();
        assert_eq!(rs.roots.len(), 1);
        assert!(has_root(&rs, c64(1.0, 0.0), 3, 1e-10));
    }

    #[test]
    fn cubic_with_vieta_check() {
        // z^3 - 20 z^2 + 1
        let p = CPoly::from_real(&[1.0, 0.0, -20.0, 1.0]);
        let rs = poly_roots(&p).unwrap();
        let r = rs.expanded();
        let prod: Complex64 = r.iter().product();
        let sum: Complex64 = r.iter().sum();
        assert!((prod + 1.0).norm() < 1e-12);
        assert!((sum - 20.0).norm() < 1e-12);
        for z in &r {
            assert!(p.eval(*z).norm() <= 1e-8 * 20.0 * z.norm().max(1.0).powi(3));
        }
        // The quadratic u^2 - 20u + 1 has roots 10 +- 3 sqrt(11).
        let q = poly_roots(&CPoly::from_real(&[1.0, -20.0, 1.0])).unwrap();
        let s = 3.0 * 11f64.sqrt();
        assert!(has_root(&q, c64(10.0 + s, 0.0), 1, 1e-13));
        assert!(has_root(&q, c64(10.0 - s, 0.0), 1, 1e-13));
    }

    #[test]
    fn zero_roots_counted() {
        let p = CPoly::from_real(&[0.0, 0.0, 2.0, 1.0]);
        let rs = poly_roots(&p).unwrap();
        assert!(has_root(&rs, c64(0.0, 0.0), 2, 1e-15));
        assert!(has_root(&rs, c64(-2.0, 0.0), 1, 1e-14));
    }

    #[test]
    fn constant_rejected() {
        assert_eq!(
            poly_roots(&CPoly::from_real(&[3.0])),
            Err(Error::DegreeTooLow(0))
        );
    }

    #[test]
    fn string_orbit_roots() {
        // (z^3 - a)(z^3 - b): six roots on two q^2-orbits
        let p =
            &CPoly::from_real(&[-96.0, 0.0, 0.0, 1.0]) * &CPoly::from_real(&[-0.01, 0.0, 0.0, 1.0]);
        let rs = poly_roots(&p).unwrap();
        assert_eq!(rs.roots.len(), 6);
        for (z, _) in &rs.roots {
            assert!(p.eval(*z).norm() <= 1e-8 * p.max_abs_coeff() * z.norm().max(1.0).powi(6));
        }
    }
}
