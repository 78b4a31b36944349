use thiserror::Error;

/// Errors surfaced by library operations. Programmer errors (index out of
/// range, arithmetic overflow in exact rationals) panic instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected complex dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ratio for level {level} is not available")]
    RatioUnavailable { level: usize },

    #[error("rejection sampling found no points in domain '{0}'")]
    EmptyDomain(String),

    #[error("evaluator produced a non-finite value at {at:?}")]
    EvaluatorFailure { at: Vec<f64> },

    #[error(
        "modulus violated on sample: |u(z)-u(w)| = {delta} > {bound} = omega({dist}) \
         for z={z:?}, w={w:?}"
    )]
    ModulusViolation {
        z: Vec<f64>,
        w: Vec<f64>,
        dist: f64,
        delta: f64,
        bound: f64,
    },

    #[error("cannot place disjoint patch ball at {at:?}: nearest obstruction at distance {gap}")]
    DisjointnessFailure { at: Vec<f64>, gap: f64 },

    #[error("solver did not converge: residual {residual} after {iterations} iterations")]
    SolverDiverged { residual: f64, iterations: usize },

    #[error("grid too coarse: need at least {need} nodes per axis, got {got}")]
    GridTooCoarse { need: usize, got: usize },

    #[error("no testable circles: every sampled circle left the domain")]
    NoTestableCircles,

    #[error("unknown domain name '{0}'")]
    UnknownDomain(String),

    #[error("search budget exhausted at item {at}")]
    BudgetExhausted { at: usize },

    #[error("certified bound not met: {0}")]
    CertificateFailure(String),

    #[error("malformed grid data: {0}")]
    GridParse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
