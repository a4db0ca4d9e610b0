use thiserror::Error;

/// Errors produced by tree construction, model building and functional
/// evaluation.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("tree degree must be at least 2, got {0}")]
    InvalidDegree(u32),

    #[error("vertex address is invalid: index {index} at position {position} exceeds the branching bound {bound}")]
    InvalidAddress {
        index: u32,
        position: usize,
        bound: u32,
    },

    #[error("the root vertex has no parent")]
    RootHasNoParent,

    #[error("the root vertex has no incoming edge")]
    NoEdgeAtRoot,

    #[error("operation requires degree {expected}, model has degree {found}")]
    WrongDegree { expected: String, found: u32 },

    #[error("model depth {available} is insufficient, need level {needed}")]
    DepthInsufficient { needed: u32, available: u32 },

    #[error("non-integer exponent {0} requires float mode")]
    NonIntegerExponent(String),

    #[error("exponent must be at least 1, got {0}")]
    ExponentOutOfRange(String),

    #[error("root data must have exactly {expected} child values, got {found}")]
    RootArity { expected: u32, found: usize },

    #[error("root data violates harmonicity: child sum {sum} != d*u0 = {expected}")]
    RootSumViolation { sum: String, expected: String },

    #[error("splitter returned children summing to {sum}, harmonicity requires {expected} at class (u={value}, up={parent})")]
    SplitterViolatesSum {
        value: String,
        parent: String,
        sum: String,
        expected: String,
    },

    #[error("table splitter has no entry for class (u={value}, up={parent})")]
    ClassNotInTable { value: String, parent: String },

    #[error("splitter is undefined on class (u={value}, up={parent}): {reason}")]
    SplitterUndefined {
        value: String,
        parent: String,
        reason: String,
    },

    #[error("address-dependent splitters support enumerated representation only")]
    CustomSplitterNotCompressible,

    #[error("level {level} is too large to enumerate; use the compressed representation")]
    EnumerationTooLarge { level: u32 },

    #[error("scalar mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("cannot parse {input:?} as a rational number")]
    ParseRational { input: String },

    #[error("model does not match oracle family {family}: {reason}")]
    FamilyModelMismatch { family: String, reason: String },

    #[error("oracle {family} does not support exponent p={p}")]
    UnsupportedOracleExponent { family: String, p: String },

    #[error("oracle value {name} is defined for {constraint}, got k={k}")]
    OracleIndexOutOfRange {
        name: String,
        constraint: String,
        k: u32,
    },

    #[error("perturbation target not found: level {level}, index {index}")]
    PerturbTarget { level: u32, index: usize },

    #[error("model definition error: {0}")]
    ModelFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
