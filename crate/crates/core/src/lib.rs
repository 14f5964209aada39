//! Six-vertex transfer matrices and root-of-unity auxiliary matrices on finite
//! periodic spin chains, with tools to classify their spectra.

pub mod bethe;
pub mod error;
pub mod functional;
pub mod lattice;
pub mod loopalg;
pub mod numerics;
pub mod pipeline;
pub mod qgrouprep;
pub mod spectra;
pub mod strings;
pub mod vertexops;

pub use error::{Error, Result};
pub use num_complex::Complex64;
