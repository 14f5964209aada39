//! Complex linear algebra and polynomial tools shared by every other module.

mod eig;
mod matrix;
mod poly;
mod roots;

pub use eig::{eig_dense, EigResult};
pub use matrix::{subspace_gap, CMatrix};
pub use poly::{interpolate, poly_divmod, CPoly};
pub use roots::{poly_roots, poly_roots_with, RootOptions, RootSet};

pub use num_complex::Complex64;

/// Absolute floor under every relative tolerance.
pub const ABS_FLOOR: f64 = 1e-13;

/// Shorthand constructor.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Relative distance `|a-b| / max(|a|,|b|,floor)`.
pub fn rel_dist(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(ABS_FLOOR)
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian inner product `<a|b>` (conjugate-linear in `a`).
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
