use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension {0} is not supported (1..={max})", max = crate::geometry::MAX_DIM)]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("expected {expected} scale bits, got {got}")]
    BitCountMismatch { expected: usize, got: usize },

    #[error("translation offset out of range or not a multiple of 2^-{fine}")]
    OffsetOutOfRange { fine: i32 },

    #[error("grid enumeration would produce {count} grids, above the cap of {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("cube {0} is not a cube of the grid")]
    NotAGridCube(String),

    #[error("cube {0} is at the top level of the grid")]
    TopLevel(String),

    #[error("atom at {0} lies outside the root cube")]
    AtomOutsideRoot(String),

    #[error("grid depth does not isolate the atoms in {0}")]
    DepthInsufficient(String),

    #[error("average over a null cube {0}")]
    NullCube(String),

    #[error("{which} does not have mean zero (mean {mean:e})")]
    MeanZeroViolation { which: &'static str, mean: f64 },

    #[error("no qualifying cube pairs in the family")]
    NoQualifyingPairs,

    #[error("iteration did not converge after {iterations} steps; bracket [{lower}, {upper}]")]
    NonConvergence {
        iterations: usize,
        lower: f64,
        upper: f64,
    },

    #[error("quadrature did not reach tolerance (estimate {estimate}, error {error:e})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("evaluation point {0} is a logarithmic singularity")]
    Singular(f64),

    #[error("the kernel must be scalar for this operation")]
    ScalarKernelRequired,

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
