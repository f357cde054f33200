use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("vectors do not span the {dim}-dimensional space")]
    NotSpanning { dim: usize },

    #[error("basis is not orthonormal (defect {defect:e})")]
    NotOrthonormal { defect: f64 },

    #[error("product basis is not usable here: {0}")]
    InvalidUpb(String),

    #[error("no admissible (S_A, S_B) subset pair; the product basis looks extendible")]
    NoAdmissiblePair,

    #[error("no maximally entangled candidate has overlap above {threshold:e} (best {best:e})")]
    NoEntangledCandidate { threshold: f64, best: f64 },

    #[error("mu = {mu:e} outside (0, {eps_lower:e}]")]
    MuOutOfRange { mu: f64, eps_lower: f64 },

    #[error("state and map were built from different product bases ({state} vs {map})")]
    SourceMismatch { state: String, map: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
