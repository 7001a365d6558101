use thiserror::Error;

/// Every failure mode the toolkit reports.
///
/// A few variants (`Infeasible`, `NotInner`, `NotMember`) are mathematical
/// answers rather than malfunctions; callers that care about the distinction
/// can use [`Error::is_mathematical`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquareInput { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("algebra is empty or not unital (identity residual {residual:.3e})")]
    NotUnital { residual: f64 },

    #[error("span is not closed under multiplication (residual {residual:.3e})")]
    NotClosed { residual: f64 },

    #[error("structure constants violate associativity or unit laws (residual {residual:.3e})")]
    AssociativityViolation { residual: f64 },

    #[error("element is not in the algebra (residual {residual:.3e})")]
    NotMember { residual: f64 },

    #[error("tensor factor {index} is not in the algebra (residual {residual:.3e})")]
    FactorNotInAlgebra { index: usize, residual: f64 },

    #[error("no diagonal exists (least-squares residual {residual:.3e})")]
    Infeasible { residual: f64 },

    #[error("witness is not in the kernel of the multiplication map (norm {norm:.3e})")]
    WitnessNotInKernel { norm: f64 },

    #[error("bimodule axiom violated: {axiom} (residual {residual:.3e})")]
    BimoduleAxiomViolation { axiom: &'static str, residual: f64 },

    #[error("map is not a derivation (Leibniz residual {residual:.3e})")]
    NotADerivation { residual: f64 },

    #[error("derivation is not inner (residual {residual:.3e})")]
    NotInner { residual: f64 },

    #[error("tensor is not a diagonal (unit residual {unit_residual:.3e}, commutation residual {commutation_residual:.3e})")]
    DiagonalInvalid {
        unit_residual: f64,
        commutation_residual: f64,
    },

    #[error("algebra is reducible but its commutant is scalar")]
    NoNonScalarCommutant,

    #[error("projection is not invariant (residual {residual:.3e})")]
    NotInvariant { residual: f64 },

    #[error("could not solve for the splitting witness (residual {residual:.3e})")]
    WitnessSolveFailed { residual: f64 },

    #[error("conjugated algebra does not commute with the projection (residual {residual:.3e})")]
    CommutationCheckFailed { residual: f64 },

    #[error("block of size {size} fails the Burnside dimension check (dim {dim})")]
    BurnsideCheckFailed { size: usize, dim: usize },

    #[error("recursion depth {0} exceeded")]
    RecursionDepthExceeded(usize),

    #[error("block kernels violate the full-or-zero dichotomy (relative residual {residual:.3e})")]
    DichotomyViolation { residual: f64 },

    #[error("optimizer diverged")]
    OptimizerDiverged,

    #[error("spanning bound violated: beta = {beta:.6} > 1/2")]
    BoundViolated { beta: f64 },

    #[error("linear algebra backend failure: {0}")]
    Backend(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for outcomes that answer the mathematical question in the negative.
    pub fn is_mathematical(&self) -> bool {
        matches!(
            self,
            Error::Infeasible { .. }
                | Error::NotInner { .. }
                | Error::NoNonScalarCommutant
                | Error::WitnessSolveFailed { .. }
                | Error::BurnsideCheckFailed { .. }
        )
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Backend(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
