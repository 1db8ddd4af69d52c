//! Sum-capacity maximization for multiple access channels whose users
//! transmit from fluid antennas: antennas that can be moved anywhere on a
//! linear aperture of a few wavelengths.
//!
//! Everything is generic over the real scalar (`f64` or `f32`); the aliases
//! below fix it to `f64`.

pub mod capacity;
pub mod channel;
pub mod closedform;
pub mod error;
pub mod harness;
pub mod numkit;
pub mod rankone;
pub mod scalar;
pub mod solvers;
pub mod waterfill;

pub use error::{Error, Result};
pub use scalar::Real;
pub use solvers::{solve, Algorithm};

pub type Scenario = channel::Scenario<f64>;
pub type UserConfig = channel::UserConfig<f64>;
pub type PathSet = channel::PathSet<f64>;
pub type PositionVector = channel::PositionVector<f64>;
pub type HermitianMatrix = numkit::HermitianMatrix<f64>;
pub type TxCovariance = capacity::TxCovariance<f64>;
pub type SolveReport = capacity::SolveReport<f64>;
pub type SolverOptions = solvers::SolverOptions<f64>;
pub type MmOptions = rankone::MmOptions<f64>;

pub type ScenarioF32 = channel::Scenario<f32>;
pub type SolveReportF32 = capacity::SolveReport<f32>;
