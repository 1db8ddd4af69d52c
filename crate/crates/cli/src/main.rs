use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fluidcap::capacity::c0_large_m;
use fluidcap::channel::{random_scenario, ScenarioDims};
use fluidcap::harness::{emit, run_sweep, Format, SweepParam, SweepSpec};
use fluidcap::waterfill::{capacity_approx, capacity_upper_bound};
use fluidcap::{solve, Algorithm, Error, MmOptions, Scenario, SolverOptions};
use serde_json::json;

#[derive(Parser)]
#[command(name = "fluidcap", version, about = "Fluid-antenna MAC sum-capacity simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random scenario as JSON
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        dims: DimArgs,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one solver on a saved scenario
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        algorithm: String,
        #[command(flatten)]
        solver: SolverArgs,
        /// Override every user's quantization level
        #[arg(long = "K")]
        k: Option<usize>,
    },
    /// Monte Carlo sweep over one scenario parameter
    Sweep {
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        algorithms: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        #[command(flatten)]
        dims: DimArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Record wall-clock runtimes (output is then not reproducible)
        #[arg(long)]
        timing: bool,
    },
    /// Closed-form capacity bounds of a saved scenario
    Bound {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        kind: BoundKind,
    },
}

#[derive(Args)]
struct DimArgs {
    #[arg(long = "M", default_value_t = 16)]
    m: usize,
    #[arg(long = "U", default_value_t = 1)]
    u: usize,
    #[arg(long = "N", default_value_t = 1)]
    n: usize,
    #[arg(long = "L", default_value_t = 5)]
    l: usize,
    #[arg(long = "W", default_value_t = 10.0)]
    w: f64,
    #[arg(long, default_value_t = 10.0)]
    snr_db: f64,
    #[arg(long = "K", default_value_t = 100)]
    k: usize,
}

impl DimArgs {
    fn dims(&self) -> ScenarioDims {
        ScenarioDims {
            users: self.u,
            bs_antennas: self.m,
            antennas: self.n,
            paths: self.l,
            length: self.w,
            quantization: self.k,
            snr_db: self.snr_db,
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 2.0)]
    tau: f64,
    /// Double tau while the relaxed blocks are far from rank one
    #[arg(long)]
    tau_doubling: bool,
    /// Grid step of the exhaustive-search benchmarks, in wavelengths
    #[arg(long)]
    es_step: Option<f64>,
}

impl SolverArgs {
    fn options(&self) -> Result<SolverOptions, Error> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidConfig(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(SolverOptions { mm: MmOptions { tau: self.tau, tau_doubling: self.tau_doubling }, es_step: self.es_step })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundKind {
    Ub,
    Approx,
    C0,
}

fn load(path: &Path) -> Result<Scenario, Error> {
    Scenario::read_json(path)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Gen { seed, dims, out } => {
            let scenario: Scenario = random_scenario(seed, &dims.dims())?;
            match out {
                Some(path) => scenario.write_json(path)?,
                None => println!("{}", scenario.to_json()),
            }
        }
        Command::Solve { scenario, algorithm, solver, k } => {
            let mut s = load(&scenario)?;
            if let Some(k) = k {
                s = s.map_users(|u| u.with_quantization(k))?;
            }
            let algorithm: Algorithm = algorithm.parse()?;
            let r = solve(&s, algorithm, &solver.options()?)?;
            let out = json!({
                "algorithm": algorithm.name(),
                "capacity_bits": r.capacity_bits,
                "initial_capacity_bits": r.initial_capacity_bits,
                "iterations": r.iterations,
                "runtime_ms": r.runtime_ms,
                "positions": r.positions.iter().map(|w| w.as_slice().to_vec()).collect::<Vec<_>>(),
                "power": r.covariances.iter().map(|q| q.matrix().trace()).collect::<Vec<_>>(),
                "rank_residuals": r.rank_residuals,
                "max_elliptope_violation": r.max_elliptope_violation,
                "objective_trace": r.objective_trace,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Sweep { param, values, trials, algorithms, seed, out, format, dims, solver, timing } => {
            let algorithms = algorithms.iter().map(|a| a.parse()).collect::<Result<Vec<Algorithm>, _>>()?;
            let format: Format = format.parse()?;
            let mut spec = SweepSpec::new(param.parse::<SweepParam>()?, values, trials, algorithms, seed);
            spec.base = dims.dims();
            spec.options = solver.options()?;
            spec.timing = timing;
            emit(&run_sweep(&spec)?, &out, format)?;
        }
        Command::Bound { scenario, kind } => {
            let s = load(&scenario)?;
            match kind {
                BoundKind::Ub => println!("{}", capacity_upper_bound(&s)?),
                BoundKind::Approx => println!("{}", capacity_approx(&s)?),
                BoundKind::C0 => {
                    for user in s.users() {
                        println!("{}", c0_large_m(user, s.bs_antennas()));
                    }
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else if e.is_nonconvergence() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
