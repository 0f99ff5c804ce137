use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: ||A - A*|| = {residual:e} > {tol:e}")]
    NotHermitian { residual: f64, tol: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("unknown irrep {0}")]
    UnknownIrrep(String),
    #[error("module carries no irrep block labels")]
    UnlabelledSpace,
    #[error("truncation exceeded: {0}")]
    TruncationExceeded(String),
    #[error("relation {relation} violated: residual {residual:e} > {tol:e}")]
    RelationViolated { relation: String, residual: f64, tol: f64 },
    #[error("triple has no vertical geometry")]
    MissingVerticalGeometry,
    #[error("invalid remainder: {0}")]
    InvalidRemainder(String),
    #[error("not factorisable: {0}")]
    NotFactorisable(String),
    #[error("action is not a cocycle: residual {0:e}")]
    ActionNotCocycle(f64),
    #[error("cocycle violation: {0}")]
    CocycleViolation(String),
    #[error("operator is not in the commutant: {0}")]
    NotCommutant(String),
    #[error("operator is not unitary: residual {0:e}")]
    NotUnitary(f64),
    #[error("not a frame: residual {0:e}")]
    NotAFrame(f64),
    #[error("expectation is not bimodular: residual {0:e}")]
    ExpectationNotBimodular(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("Hilbert space carries no torus weight metadata")]
    WeightMetadataMissing,
    #[error("operator is not invariant: {0}")]
    NotInvariant(String),
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error("scenario build error: {0}")]
    ScenarioBuild(String),
    #[error("{0} check(s) failed")]
    CheckFailure(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
