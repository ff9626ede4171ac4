use thiserror::Error;

/// Errors produced by the polytope kernels and dataset tooling.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("row {row} has length {got}, expected {expected}")]
    RaggedRows { row: usize, expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular matrix")]
    Singular,
    #[error("zero vector has no primitive direction")]
    ZeroVector,
    #[error("polyhedron is empty")]
    EmptyPolyhedron,
    #[error("ambient dimension {0} exceeds the supported maximum of {max}", max = crate::polytope::MAX_DIM)]
    DimensionTooLarge(usize),
    #[error("polyhedron is unbounded")]
    Unbounded,
    #[error("lattice point enumeration exceeded the cap of {0} points")]
    CapExceeded(usize),
    #[error("polytope has a non-integral vertex")]
    NonLatticeVertex,
    #[error("polytope is not full-dimensional")]
    NotFullDimensional,
    #[error("polytope is not reflexive: {0}")]
    NotReflexive(String),
    #[error("integer value out of the supported range")]
    Overflow,
    #[error("dilation factor must be at least 1, got {0}")]
    InvalidDilation(i64),
    #[error("no entry in {{-1, 0, 1}} to perturb")]
    NoEligibleEntry,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("context length must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("token {0} is not in the vocabulary")]
    UnknownToken(String),
    #[error("token id {0} is not in the vocabulary")]
    UnknownTokenId(u32),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("inconsistency: {0}")]
    Inconsistency(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
