//! Monte Carlo sweeps over one scenario parameter, with deterministic
//! CSV / JSON output.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{random_scenario, Scenario, ScenarioDims, GAIN_LAW};
use crate::error::{Error, Result};
use crate::solvers::{solve, Algorithm, SolverOptions};

/// Exact CSV header of emitted result tables.
pub const CSV_HEADER: [&str; 13] = [
    "seed",
    "M",
    "U",
    "N",
    "L",
    "W_lambda",
    "snr_db",
    "algorithm",
    "capacity_bits",
    "iterations",
    "runtime_ms",
    "max_rank_residual",
    "status",
];

/// Environment variable capping the sweep worker count.
pub const THREADS_ENV: &str = "FLUIDCAP_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "M")]
    M,
    #[serde(rename = "N")]
    N,
    #[serde(rename = "U")]
    U,
    #[serde(rename = "L")]
    L,
    #[serde(rename = "W_lambda")]
    WLambda,
    #[serde(rename = "snr_db")]
    SnrDb,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::M => "M",
            SweepParam::N => "N",
            SweepParam::U => "U",
            SweepParam::L => "L",
            SweepParam::WLambda => "W_lambda",
            SweepParam::SnrDb => "snr_db",
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(self, base: &ScenarioDims, value: f64) -> Result<ScenarioDims> {
        let count = || {
            if value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(Error::config(format!("{} must be a positive integer, got {value}", self.name())))
            }
        };
        let mut dims = *base;
        match self {
            SweepParam::M => dims.bs_antennas = count()?,
            SweepParam::N => dims.antennas = count()?,
            SweepParam::U => dims.users = count()?,
            SweepParam::L => dims.paths = count()?,
            SweepParam::WLambda => {
                if !(value > 0.0) || !value.is_finite() {
                    return Err(Error::config(format!("W_lambda must be positive, got {value}")));
                }
                dims.length = value;
            }
            SweepParam::SnrDb => {
                if !value.is_finite() {
                    return Err(Error::config(format!("snr_db must be finite, got {value}")));
                }
                dims.snr_db = value;
            }
        }
        Ok(dims)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [SweepParam::M, SweepParam::N, SweepParam::U, SweepParam::L, SweepParam::WLambda, SweepParam::SnrDb]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config(format!("unknown sweep parameter '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub trials: usize,
    pub base: ScenarioDims,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    pub options: SolverOptions<f64>,
    /// Record wall-clock runtimes. Off by default so output bytes only
    /// depend on the spec.
    pub timing: bool,
}

impl SweepSpec {
    pub fn new(param: SweepParam, values: Vec<f64>, trials: usize, algorithms: Vec<Algorithm>, seed: u64) -> Self {
        Self {
            param,
            values,
            trials,
            base: ScenarioDims::default(),
            algorithms,
            seed,
            options: SolverOptions::default(),
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("sweep needs at least one value"));
        }
        if self.trials == 0 {
            return Err(Error::config("sweep needs at least one trial"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("sweep needs at least one algorithm"));
        }
        for &v in &self.values {
            self.param.apply(&self.base, v)?;
        }
        Ok(())
    }

    /// Seed, dimensions and scenario of one trial.
    pub fn trial_scenario(&self, value: f64, trial: usize) -> Result<(u64, ScenarioDims, Scenario<f64>)> {
        let seed = trial_seed(self.seed, value, trial);
        let dims = self.param.apply(&self.base, value)?;
        Ok((seed, dims, random_scenario(seed, &dims)?))
    }
}

/// First eight bytes (little endian) of `SHA-256(seed ‖ value bits ‖ trial)`,
/// all fields little endian.
pub fn trial_seed(seed: u64, value: f64, trial: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(value.to_bits().to_le_bytes());
    h.update((trial as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub value: f64,
    pub trial: usize,
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "U")]
    pub u: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "W_lambda")]
    pub w_lambda: f64,
    pub snr_db: f64,
    pub algorithm: Algorithm,
    pub capacity_bits: Option<f64>,
    pub iterations: Option<usize>,
    pub runtime_ms: Option<f64>,
    pub max_rank_residual: Option<f64>,
    pub status: String,
}

/// Mean capacity of one algorithm at one sweep value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub value: f64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "U")]
    pub u: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "W_lambda")]
    pub w_lambda: f64,
    pub snr_db: f64,
    pub algorithm: Algorithm,
    /// `None` when no trial succeeded.
    pub mean_capacity_bits: Option<f64>,
    pub succeeded: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub version: String,
    pub swept_parameter: SweepParam,
    pub values: Vec<f64>,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    pub base: ScenarioDims,
    pub tau: f64,
    pub tau_doubling: bool,
    pub es_step: Option<f64>,
    pub timing: bool,
    pub gain_law: String,
    pub seed_derivation: String,
}

impl SweepMetadata {
    fn of(spec: &SweepSpec) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            swept_parameter: spec.param,
            values: spec.values.clone(),
            trials: spec.trials,
            algorithms: spec.algorithms.clone(),
            seed: spec.seed,
            base: spec.base,
            tau: spec.options.mm.tau,
            tau_doubling: spec.options.mm.tau_doubling,
            es_step: spec.options.es_step,
            timing: spec.timing,
            gain_law: GAIN_LAW.to_string(),
            seed_derivation: "first 8 bytes (LE) of SHA-256(seed LE || value f64 bits LE || trial u64 LE)".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResults {
    pub metadata: SweepMetadata,
    pub rows: Vec<ResultRow>,
    pub aggregates: Vec<AggregateRow>,
}

fn worker_threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
    }
}

fn run_trial(spec: &SweepSpec, value: f64, trial: usize) -> Result<Vec<ResultRow>> {
    let (seed, dims, scenario) = spec.trial_scenario(value, trial)?;
    Ok(spec
        .algorithms
        .iter()
        .map(|&algorithm| {
            let mut row = ResultRow {
                value,
                trial,
                seed,
                m: dims.bs_antennas,
                u: dims.users,
                n: dims.antennas,
                l: dims.paths,
                w_lambda: dims.length,
                snr_db: dims.snr_db,
                algorithm,
                capacity_bits: None,
                iterations: None,
                runtime_ms: None,
                max_rank_residual: None,
                status: String::new(),
            };
            match solve(&scenario, algorithm, &spec.options) {
                Ok(r) => {
                    row.capacity_bits = Some(r.capacity_bits);
                    row.iterations = Some(r.iterations);
                    row.runtime_ms = spec.timing.then_some(r.runtime_ms);
                    row.max_rank_residual = (!r.rank_residuals.is_empty()).then(|| r.max_rank_residual());
                    row.status = "ok".into();
                }
                Err(e) => row.status = e.kind().into(),
            }
            row
        })
        .collect())
}

fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut out: Vec<AggregateRow> = Vec::new();
    for row in rows {
        let pos = out.iter().position(|a| a.value.to_bits() == row.value.to_bits() && a.algorithm == row.algorithm);
        let agg = match pos {
            Some(i) => &mut out[i],
            None => {
                out.push(AggregateRow {
                    value: row.value,
                    m: row.m,
                    u: row.u,
                    n: row.n,
                    l: row.l,
                    w_lambda: row.w_lambda,
                    snr_db: row.snr_db,
                    algorithm: row.algorithm,
                    mean_capacity_bits: None,
                    succeeded: 0,
                    trials: 0,
                });
                out.last_mut().expect("just pushed")
            }
        };
        agg.trials += 1;
        if let Some(c) = row.capacity_bits {
            agg.succeeded += 1;
            agg.mean_capacity_bits = Some(agg.mean_capacity_bits.unwrap_or(0.0) + c);
        }
    }
    for agg in &mut out {
        agg.mean_capacity_bits = agg.mean_capacity_bits.map(|s| s / agg.succeeded as f64);
    }
    out.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.algorithm.cmp(&b.algorithm)));
    out
}

/// Runs every (value, trial, algorithm) combination. Solver failures are
/// recorded in the row status; only an invalid spec is an error.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResults> {
    spec.validate()?;
    let jobs: Vec<(f64, usize)> =
        spec.values.iter().flat_map(|&v| (0..spec.trials).map(move |t| (v, t))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads()?)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let chunks: Vec<Result<Vec<ResultRow>>> =
        pool.install(|| jobs.par_iter().map(|&(v, t)| run_trial(spec, v, t)).collect());
    let mut rows = Vec::new();
    for chunk in chunks {
        rows.extend(chunk?);
    }
    rows.sort_by(|a, b| {
        a.value.total_cmp(&b.value).then(a.trial.cmp(&b.trial)).then(a.algorithm.cmp(&b.algorithm))
    });
    let aggregates = aggregate(&rows);
    Ok(SweepResults { metadata: SweepMetadata::of(spec), rows, aggregates })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::config(format!("unknown output format '{s}'"))),
        }
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Result table as CSV: one line per row, then one `mean` line per
/// aggregate.
pub fn write_csv<W: Write>(results: &SweepResults, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &results.rows {
        w.write_record([
            r.seed.to_string(),
            r.m.to_string(),
            r.u.to_string(),
            r.n.to_string(),
            r.l.to_string(),
            r.w_lambda.to_string(),
            r.snr_db.to_string(),
            r.algorithm.to_string(),
            opt(r.capacity_bits),
            opt(r.iterations),
            opt(r.runtime_ms),
            opt(r.max_rank_residual),
            r.status.clone(),
        ])
        .map_err(csv_err)?;
    }
    for a in &results.aggregates {
        w.write_record([
            "mean".to_string(),
            a.m.to_string(),
            a.u.to_string(),
            a.n.to_string(),
            a.l.to_string(),
            a.w_lambda.to_string(),
            a.snr_db.to_string(),
            a.algorithm.to_string(),
            opt(a.mean_capacity_bits),
            String::new(),
            String::new(),
            String::new(),
            "aggregate".to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(results: &SweepResults) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(results, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Sidecar path `<out>.meta.json` written next to CSV output.
pub fn metadata_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes `results` to `path`. CSV output gets a metadata sidecar; JSON
/// output embeds it.
pub fn emit(results: &SweepResults, path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            std::fs::write(path, to_csv_string(results)?)?;
            std::fs::write(metadata_path(path), serde_json::to_string_pretty(&results.metadata)? + "\n")?;
        }
        Format::Json => std::fs::write(path, serde_json::to_string_pretty(results)? + "\n")?,
    }
    Ok(())
}

pub fn read_json(path: &Path) -> Result<SweepResults> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
