use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Gram matrix is not unimodular at p (det valuation {0})")]
    NotSelfDual(i64),
    #[error("invalid base vector: {0}")]
    BasePointInvalid(String),
    #[error("residue characteristic must be an odd prime, got {0}")]
    EvenResidueChar(u64),
    #[error("invalid quadratic space: {0}")]
    InvalidQuadSpace(String),
    #[error("level {level} is below the cell level {cell_level}")]
    LevelTooSmall { level: i64, cell_level: i64 },
    #[error("no certified stabilization up to level {0}")]
    NonStabilizing(i64),
    #[error("fiber is singular on the support of the test function")]
    SingularFiber,
    #[error("Gauss sum modulus {0} is not a power of p")]
    NormalizationFailure(String),
    #[error("element of SL2 is not well defined on the metaplectic cover for odd dimension")]
    MetaplecticAmbiguity,
    #[error("restriction to X_1 needs a finer level (undetermined at {0})")]
    NeedsRefinement(i64),
    #[error("Hecke coset enumeration failed: {0}")]
    CosetEnumerationFailure(String),
    #[error("Euler factor has a pole at s")]
    PoleAtS,
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
