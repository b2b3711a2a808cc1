use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("quadrature order {order} exceeds hard cap {cap}")]
    QuadratureTooLarge { order: usize, cap: usize },

    #[error("norm constraint violated: sum |alpha|^2 = {sum}, expected {expected}")]
    NormViolation { sum: f64, expected: f64 },

    #[error("imaginary-time propagation did not converge after {iterations} iterations (last relative change {last_change:e})")]
    NotConverged {
        iterations: usize,
        last_change: f64,
        state: Box<crate::meanfield::GpeGroundState>,
    },

    #[error("unresolved width: <x^2> = {second_moment:e} is below grid spacing squared {dx2:e}")]
    UnresolvedWidth { second_moment: f64, dx2: f64 },

    #[error("ground-state density at the grid boundary is {ratio:e} of the peak; widen the grid")]
    GridTooNarrow { ratio: f64 },

    #[error("level count {levels} too small: tail occupation {tail:e}")]
    InsufficientLevels { levels: usize, tail: f64 },

    #[error("density matrix is not Hermitian (residue {0:e})")]
    NonHermitian(f64),

    #[error("profile too wide for grid: no half-maximum crossing")]
    ProfileTooWide,

    #[error("series too short: {len} < {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("empty accumulator")]
    EmptyAccumulator,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("config line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("config value out of range for `{key}`: {reason}")]
    OutOfRange { key: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
