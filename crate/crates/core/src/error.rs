use crate::regularizer::RegPathRecord;
use crate::saddle::PhiMinimum;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("blocks {first} and {second} overlap at coordinate {coord}")]
    OverlappingBlocks { first: usize, second: usize, coord: usize },
    #[error("coordinate {0} is not covered by any block")]
    UncoveredCoordinate(usize),
    #[error("no free unknowns")]
    NoFreeUnknowns,
    #[error("the Y Gram matrix is not symmetric positive definite")]
    GramNotPositiveDefinite,
    #[error("the load functional vanishes")]
    ZeroLoad,
    #[error("minimization of Φ_λ did not converge after {} iterations (best Φ = {:e})", .best.iterations, .best.value)]
    PhiNotConverged { best: Box<PhiMinimum> },
    #[error("ψ(α = {}) did not converge after {} iterations (KKT residual {:e})", .best.alpha, .best.iterations, .best.kkt_residual)]
    PsiNotConverged { best: Box<RegPathRecord> },
    #[error("{what} did not converge after {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },
    #[error("inf-sup degenerate; supply continuum C*")]
    InfSupDegenerate,
    #[error("empty schedule")]
    EmptySchedule,
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("mesh: {0}")]
    Mesh(String),
    #[error("model: {0}")]
    Model(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("oracle dimension cap: n_Y = {n_y}, n_X = {n_x} (limits 3 and 4)")]
    OracleDimensionCap { n_y: usize, n_x: usize },
    #[error("oracle contradiction: {0}")]
    OracleContradiction(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for malformed input (files, meshes, schedules, problem data).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidProblem(_)
                | Error::OverlappingBlocks { .. }
                | Error::UncoveredCoordinate(_)
                | Error::NoFreeUnknowns
                | Error::GramNotPositiveDefinite
                | Error::ZeroLoad
                | Error::EmptySchedule
                | Error::InvalidSchedule(_)
                | Error::Mesh(_)
                | Error::Model(_)
                | Error::Parse(_)
                | Error::OracleDimensionCap { .. }
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}
