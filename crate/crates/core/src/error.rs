use thiserror::Error;

use crate::multiindex::MultiIndex;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("variable count mismatch: {0} vs {1}")]
    NvarsMismatch(usize, usize),
    #[error("polynomial is not homogeneous of degree {0}")]
    NotHomogeneous(u32),
    #[error("polynomial degree {degree} exceeds tensor order {order}")]
    DegreeOverflow { degree: u32, order: u32 },
    #[error("duplicate multi-index {0}")]
    DuplicateIndex(MultiIndex),
    #[error("multi-index {0} out of range")]
    IndexOutOfRange(MultiIndex),
    #[error("monomial basis must contain the constant monomial")]
    MissingConstant,
    #[error("generating matrix has no column for border monomial {0}")]
    MissingColumn(MultiIndex),
    #[error("no rows for border monomial {0}: rank too large for the tensor order")]
    EmptyRowSet(MultiIndex),
    #[error("linear system for border monomial {alpha} is inconsistent (residual {residual:.3e})")]
    InconsistentSystem { alpha: MultiIndex, residual: f64 },
    #[error("only {found} independent monomials up to degree {max_degree}, {wanted} requested")]
    NotEnoughMonomials { wanted: usize, found: usize, max_degree: u32 },
    #[error("sampling points on the variety failed (worst residual {0:.3e})")]
    SamplingFailed(f64),
    #[error("witness is not on the variety (residual {0:.3e})")]
    WitnessOffVariety(f64),
    #[error("dimension of the variety is unknown")]
    UnknownDimension,
    #[error("residual system has no solution within tolerance (best residual {0:.3e})")]
    NoSolution(f64),
    #[error("multiplication matrices do not commute (max commutator {0:.3e})")]
    NonCommuting(f64),
    #[error("could not separate eigenvalues of the multiplication matrices")]
    DefectiveSpectrum,
    #[error("weight system is rank deficient")]
    RankDeficient,
    #[error("no decomposition found for ranks {min}..={max}")]
    RankExhausted { min: usize, max: usize },
    #[error("tensor is not on the variety: generator {generator} violated by {violation:.3e}")]
    NotAMember { generator: usize, violation: f64 },
    #[error("coincident interpolation nodes")]
    CoincidentNodes,
    #[error("Vandermonde consistency violated ({0:.3e})")]
    VandermondeConsistency(f64),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
