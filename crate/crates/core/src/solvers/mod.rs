//! Top-level solvers: the four optimization algorithms and the benchmark
//! schemes they are compared against.

mod algorithms;
mod benchmarks;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use algorithms::{alg1_alternating, alg2_joint, alg3_single_user, alg4_multiuser};
pub use benchmarks::{
    benchmark_es, benchmark_fixed, benchmark_iwf_es, benchmark_simplified_iwf_es, ES_BUDGET,
};

use crate::capacity::{SolveReport, TxCovariance};
use crate::channel::{even_grid_positions, PositionVector, Scenario};
use crate::error::{Error, Result};
use crate::numkit::HermitianMatrix;
use crate::rankone::MmOptions;
use crate::scalar::Real;

/// Capacity change (bits) that ends the single-antenna loops.
pub const SINGLE_ANTENNA_TOL: f64 = 1e-8;
/// Capacity change (bits) that ends the multi-antenna loops.
pub const MULTI_ANTENNA_TOL: f64 = 1e-6;
pub const ALG1_MAX_CYCLES: usize = 100;
pub const ALG3_MAX_ROUNDS: usize = 50;
pub const ALG4_MAX_SWEEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Alg1,
    Alg2,
    Alg3,
    Alg4,
    Fixed,
    Es,
    IwfEs,
    SiwfEs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Alg1,
        Algorithm::Alg2,
        Algorithm::Alg3,
        Algorithm::Alg4,
        Algorithm::Fixed,
        Algorithm::Es,
        Algorithm::IwfEs,
        Algorithm::SiwfEs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Alg3 => "alg3",
            Algorithm::Alg4 => "alg4",
            Algorithm::Fixed => "fixed",
            Algorithm::Es => "es",
            Algorithm::IwfEs => "iwf-es",
            Algorithm::SiwfEs => "siwf-es",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config(format!("unknown algorithm '{s}'")))
    }
}

/// Knobs shared by [`solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T: Real> {
    pub mm: MmOptions<T>,
    /// Grid step of the exhaustive-search benchmarks; `None` uses each
    /// user's own grid `W / K`.
    pub es_step: Option<T>,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self { mm: MmOptions::default(), es_step: None }
    }
}

/// Default starting positions: evenly spaced over the aperture, on the grid.
pub fn default_positions<T: Real>(scenario: &Scenario<T>) -> Vec<PositionVector<T>> {
    scenario.users().iter().map(even_grid_positions).collect()
}

/// Runs `algorithm` from its default starting point.
pub fn solve<T: Real>(
    scenario: &Scenario<T>,
    algorithm: Algorithm,
    options: &SolverOptions<T>,
) -> Result<SolveReport<T>> {
    let init = default_positions(scenario);
    let step = options.es_step;
    match algorithm {
        Algorithm::Alg1 => alg1_alternating(scenario, &init),
        Algorithm::Alg2 => alg2_joint(scenario, &init, options.mm),
        Algorithm::Alg3 => alg3_single_user(scenario, &init[0], options.mm),
        Algorithm::Alg4 => alg4_multiuser(scenario, &init, options.mm),
        Algorithm::Fixed => benchmark_fixed(scenario),
        Algorithm::Es => benchmark_es(scenario, step),
        Algorithm::IwfEs => benchmark_iwf_es(scenario, step),
        Algorithm::SiwfEs => benchmark_simplified_iwf_es(scenario, step),
    }
}

fn require_single_antenna<T: Real>(scenario: &Scenario<T>, solver: &'static str) -> Result<()> {
    if scenario.is_single_antenna() {
        Ok(())
    } else {
        Err(Error::WrongSolver { solver, requirement: "every user to have a single antenna" })
    }
}

fn require_single_user<T: Real>(scenario: &Scenario<T>, solver: &'static str) -> Result<()> {
    if scenario.user_count() == 1 {
        Ok(())
    } else {
        Err(Error::WrongSolver { solver, requirement: "exactly one user" })
    }
}

fn check_init<T: Real>(scenario: &Scenario<T>, init: &[PositionVector<T>]) -> Result<()> {
    if init.len() != scenario.user_count() {
        return Err(Error::contract(format!(
            "{} initial position vectors for {} users",
            init.len(),
            scenario.user_count()
        )));
    }
    for (user, w) in scenario.users().iter().zip(init) {
        PositionVector::for_user(w.as_slice().to_vec(), user)?;
    }
    Ok(())
}

fn full_power<T: Real>(scenario: &Scenario<T>) -> Vec<TxCovariance<T>> {
    scenario
        .users()
        .iter()
        .map(|u| TxCovariance::unchecked(HermitianMatrix::from_real_diagonal(&[u.power()]), u.power()))
        .collect()
}

/// Grid of a user for an exhaustive search with step `s` (`round(W/s)`
/// intervals), or the user's own grid.
fn search_quantization<T: Real>(length: T, own: usize, step: Option<T>) -> Result<usize> {
    match step {
        None => Ok(own),
        Some(s) if s > T::zero() => {
            let k = (length / s).round().as_f64();
            if k < 1.0 {
                return Err(Error::config(format!("search step {s} exceeds the aperture {length}")));
            }
            Ok(k as usize)
        }
        Some(s) => Err(Error::config(format!("search step must be positive, got {s}"))),
    }
}

struct Timer(Instant);

impl Timer {
    fn start() -> Self {
        Timer(Instant::now())
    }

    fn ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

fn report<T: Real>(
    capacity_bits: T,
    covariances: Vec<TxCovariance<T>>,
    positions: Vec<PositionVector<T>>,
    objective_trace: Vec<T>,
    iterations: usize,
    timer: &Timer,
) -> SolveReport<T> {
    SolveReport {
        capacity_bits,
        covariances,
        positions,
        objective_trace,
        rank_residuals: Vec::new(),
        mm_traces: Vec::new(),
        max_elliptope_violation: T::zero(),
        initial_capacity_bits: None,
        iterations,
        runtime_ms: timer.ms(),
    }
}
