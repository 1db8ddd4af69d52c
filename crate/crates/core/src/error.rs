use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Best iterate carried by a nonconvergence error, widened to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub enum BestIterate {
    Matrix(DMatrix<Complex64>),
    Matrices(Vec<DMatrix<Complex64>>),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive definite: pivot {pivot} has value {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("{routine} did not converge within {iterations} iterations (last change {change:e})")]
    NonConvergence {
        routine: &'static str,
        iterations: usize,
        change: f64,
        best: Box<BestIterate>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{solver} cannot run on this scenario: {requirement}")]
    WrongSolver {
        solver: &'static str,
        requirement: &'static str,
    },

    #[error("two-path closed form is degenerate: both paths share one departure angle")]
    DegeneratePaths,

    #[error("position grid exhausted: {needed} antennas but only {available} free grid points")]
    InfeasibleMapping { needed: usize, available: usize },

    #[error("search budget exceeded: {combinations} combinations (limit {limit})")]
    Budget { combinations: f64, limit: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    /// True for errors caused by an invalid scenario or option set.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::WrongSolver { .. }
                | Error::Budget { .. }
                | Error::Contract(_)
                | Error::Json(_)
        )
    }

    /// Short machine-readable tag, used as a result-row status.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Contract(_) => "contract",
            Error::Domain(_) => "domain",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::NonConvergence { .. } => "nonconvergence",
            Error::InvalidConfig(_) => "invalid_config",
            Error::WrongSolver { .. } => "wrong_solver",
            Error::DegeneratePaths => "degenerate_paths",
            Error::InfeasibleMapping { .. } => "infeasible_mapping",
            Error::Budget { .. } => "budget",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub fn is_nonconvergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}
