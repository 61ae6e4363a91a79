use thiserror::Error;

use crate::calibration::mlp::TrainingTrace;
use crate::kinematics::JointVector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("degenerate projection: homogeneous weight {0:e} is numerically zero")]
    DegenerateProjection(f64),

    #[error("degenerate statistics: {0}")]
    DegenerateStatistics(String),

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("insufficient data: need at least {needed} correspondences, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("training diverged at epoch {epoch}")]
    TrainingFailure { epoch: usize, trace: Box<TrainingTrace> },

    #[error("joint {joint} value {value} outside limits [{lo}, {hi}]")]
    LimitViolation { joint: usize, value: f64, lo: f64, hi: f64 },

    #[error("inverse kinematics did not converge after {iterations} iterations (best residual {residual:.3e} m)")]
    NonConvergence {
        iterations: usize,
        best: JointVector,
        residual: f64,
    },

    #[error("target unreachable: {0}")]
    Unreachable(String),

    #[error("singular azimuth: target lies on the shoulder axis")]
    SingularAzimuth,

    #[error("{method} estimator failed: {source}")]
    Estimator {
        method: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("stroke {stroke}, via point {index}: {source}")]
    ViaPoint {
        stroke: usize,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, used in the CLI's JSON error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::DegenerateProjection(_) => "degenerate-projection",
            Error::DegenerateStatistics(_) => "degenerate-statistics",
            Error::DegenerateConfiguration(_) => "degenerate-configuration",
            Error::InsufficientData { .. } => "insufficient-data",
            Error::TrainingFailure { .. } => "training-failure",
            Error::LimitViolation { .. } => "limit-violation",
            Error::NonConvergence { .. } => "non-convergence",
            Error::Unreachable(_) => "unreachable",
            Error::SingularAzimuth => "singular-azimuth",
            Error::Estimator { source, .. } => source.kind(),
            Error::ViaPoint { source, .. } => source.kind(),
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
