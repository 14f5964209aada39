use num_complex::Complex64;

/// Errors raised anywhere in the workbench.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("polynomial of degree {0} has no roots to find")]
    DegreeTooLow(usize),
    #[error("root finder did not converge after {iterations} iterations (degree {degree})")]
    RootsNotConverged {
        iterations: usize,
        degree: usize,
        coeffs: Vec<Complex64>,
    },
    #[error("duplicate interpolation nodes at positions {0} and {1}")]
    DuplicateNodes(usize, usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("samples inconsistent with degree bound: residual {residual:e}")]
    Inconsistent { residual: f64 },
    #[error("division by the zero polynomial")]
    ZeroDivisor,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("QR iteration stalled at index {index} (norm {norm:e}, subdiagonal {subdiag:e})")]
    EigNotConverged {
        index: usize,
        norm: f64,
        subdiag: f64,
    },
    #[error("singular linear system")]
    Singular,
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("invalid sector: {0}")]
    InvalidSector(String),
    #[error("Boltzmann weights are singular at z = {0}")]
    WeightSingularity(Complex64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("vector rejected as eigenvector (relative residual {0:e})")]
    NotEigenvector(f64),
    #[error("degenerate spectrum after {redraws} redraws in a block of dimension {dim}")]
    PersistentDegeneracy { redraws: usize, dim: usize },
    #[error("unclassifiable root trajectory {first} -> {second}")]
    Unclassifiable { first: Complex64, second: Complex64 },
    #[error("zero accounting failed: {0}")]
    Classification(String),
    #[error("lambda_0 = {0} is not a positive integer")]
    NonIntegerWeight(f64),
    #[error("not a highest-weight vector (residual {0:e})")]
    NotHighestWeight(f64),
    #[error("identity violated: {name} residual {residual:e}")]
    IdentityViolation { name: String, residual: f64 },
    #[error("kernel has dimension {0}, expected {1}")]
    KernelDimension(usize, usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
