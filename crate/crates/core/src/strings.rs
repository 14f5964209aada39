//! Complete-string polynomial predicted from Bethe data, and its comparison with
//! measured string centres and the Drinfeld polynomial.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bethe::BetheData;
use crate::error::Result;
use crate::lattice::ModelParams;
use crate::loopalg::DrinfeldData;
use crate::numerics::{poly_divmod, poly_roots, CPoly, ABS_FLOOR};
use crate::spectra::{match_multisets, ZeroData};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Bound on the division remainder and on coefficients off the `z^{N'}` lattice.
pub const DIVISIBILITY_TOL: f64 = 1e-8;
/// Relative tolerance for the root comparisons.
pub const MATCH_TOL: f64 = 1e-6;

/// String polynomial predicted from Bethe roots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StringPrediction {
    /// Quotient as a polynomial in `z`.
    pub quotient: CPoly,
    /// The same quotient as a polynomial in `u = z^{N'}`.
    pub in_u: CPoly,
    /// Remainder size relative to the numerator.
    pub remainder: f64,
    /// Largest coefficient off the `z^{N'}` lattice, relative.
    pub off_lattice: f64,
    /// Roots in `u`: the predicted `(z_j^S)^{N'}`.
    pub u_roots: Vec<Complex64>,
    /// Leading coefficient, the predicted `lim N_mu`.
    pub normalization: Complex64,
}

impl StringPrediction {
    pub fn pass(&self) -> bool {
        self.remainder <= DIVISIBILITY_TOL && self.off_lattice <= DIVISIBILITY_TOL
    }
}

/// Which form of the string identity to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StringForm {
    /// `q^{-2(l+1) n_inf} (z q^{2l} - 1)^M / (P_B(z q^{2l}) P_B(z q^{2(l-1)}))`; holds for every `n_inf`.
    General,
    /// `q^{2(l+1) n_inf} (z q^{2l} - 1)^M / (P_B(z q^{2l}) P_B(z q^{2(l+2)}))`; agrees with `General` only when `n_inf = 0` and `N' = 3`.
    Printed,
}

/// `z^{-n_inf} sum_l` of the chosen terms, assembled over the product of the distinct shifted
/// `P_B` factors (squared for the printed form at `N' = 2`), then divided out.
pub fn string_poly_from_bethe(data: &BetheData, params: &ModelParams) -> Result<StringPrediction> {
    string_poly_with(data, params, StringForm::General)
}

pub fn string_poly_with(
    data: &BetheData,
    params: &ModelParams,
    form: StringForm,
) -> Result<StringPrediction> {
    let np = params.n_prime;
    let q2 = params.q * params.q;
    let pb = data.p_b();
    let (sign, partner) = match form {
        StringForm::General => (-1, np - 1),
        StringForm::Printed => (1, 2 % np),
    };
    let squared = partner == 0;
    let shifted: Vec<CPoly> = (0..np).map(|l| pb.rescale_arg(q2.powi(l as i32))).collect();
    let mut num = CPoly::zero();
    let mut den = CPoly::constant(ONE);
    for (l, s) in shifted.iter().enumerate() {
        den = &den * s;
        if squared {
            den = &den * s;
        }
        let mut term = CPoly::new(vec![-ONE, q2.powi(l as i32)]).pow(params.m as u32);
        term = term.scale(q2.powi(sign * ((l + 1) * data.n_inf) as i32));
        // factors missing from this term's own denominator
        let other = (l + partner) % np;
        for (k, t) in shifted.iter().enumerate() {
            if squared {
                if k != l {
                    term = &(&term * t) * t;
                }
            } else if k != l && k != other {
                term = &term * t;
            }
        }
        num = &num + &term;
    }
    let divisor = den.shift_up(data.n_inf);
    let (quot, rem) = poly_divmod(&num, &divisor)?;
    let scale = num.max_abs_coeff().max(ABS_FLOOR);
    let remainder = rem.max_abs_coeff() / scale;
    let qmax = quot.max_abs_coeff().max(ABS_FLOOR);
    let off_lattice = quot
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(k, _)| k % np != 0)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max)
        / qmax;
    let in_u = CPoly::new(quot.coeffs().iter().step_by(np).copied().collect()).trimmed(1e-12);
    let u_roots = if in_u.degree().unwrap_or(0) > 0 {
        poly_roots(&in_u)?.expanded()
    } else {
        vec![]
    };
    let normalization = if in_u.is_zero() {
        Complex64::new(0.0, 0.0)
    } else {
        in_u.leading()
    };
    Ok(StringPrediction {
        quotient: quot,
        in_u,
        remainder,
        off_lattice,
        u_roots,
        normalization,
    })
}

/// Residual of one exponent hypothesis `a_j = (z_j^S)^{e}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentMatch {
    pub exponent: i32,
    pub matched: bool,
}

/// Three-way comparison of prediction, measured strings and Drinfeld data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StringMatch {
    /// Predicted `u` roots against measured `(z_j^S)^{N'}`.
    pub prediction_vs_measured: bool,
    /// Exponent hypotheses tried against the Drinfeld parameters.
    pub exponents: Vec<ExponentMatch>,
    /// Number of strings equals the Drinfeld degree.
    pub multiplicity: Option<bool>,
}

impl StringMatch {
    /// Whether the hypothesis with the given exponent matched.
    pub fn exponent(&self, e: i32) -> Option<bool> {
        self.exponents
            .iter()
            .find(|x| x.exponent == e)
            .map(|x| x.matched)
    }
}

/// `(z^S)^{e}` from the stored `N'`-th powers; `e` must be a multiple of `N'`.
fn power_of_centres(zeros: &ZeroData, e: i32, np: usize) -> Vec<Complex64> {
    zeros
        .strings
        .iter()
        .map(|s| s.power.powi(e / np as i32))
        .collect()
}

pub fn match_strings_drinfeld(
    prediction: &StringPrediction,
    zeros: &ZeroData,
    drinfeld: Option<&DrinfeldData>,
    params: &ModelParams,
) -> StringMatch {
    let measured: Vec<Complex64> = zeros.strings.iter().map(|s| s.power).collect();
    let prediction_vs_measured =
        match_multisets(&prediction.u_roots, &measured, MATCH_TOL).is_some();
    let (n, np) = (params.n as i32, params.n_prime as i32);
    let mut candidates = vec![-n, n];
    if np != n {
        candidates.extend([-np, np]);
    }
    let exponents = match drinfeld {
        Some(d) => {
            let a = d.expanded();
            candidates
                .into_iter()
                .map(|e| ExponentMatch {
                    exponent: e,
                    matched: match_multisets(
                        &power_of_centres(zeros, e, params.n_prime),
                        &a,
                        MATCH_TOL,
                    )
                    .is_some(),
                })
                .collect()
        }
        None => vec![],
    };
    StringMatch {
        prediction_vs_measured,
        exponents,
        multiplicity: drinfeld.map(|d| d.expanded().len() == zeros.n_s()),
    }
}
