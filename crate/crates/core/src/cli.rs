//! Command-line front end for the `tplcov` binary.
//!
//! Exit codes: 0 success, 2 data error, 3 numeric error, 64 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{
    aggregate_to_table, render_table, run_benchmark, write_replicates_csv, write_results_csv, BenchConfig,
};
use crate::error::TplError;
use crate::io::{read_data_file, with_file, write_data_csv, write_matrix, MatrixFormat};
use crate::optimizer::OptimizerConfig;
use crate::select::{tpl_estimate, EstimateConfig, Penalty, DEFAULT_ALPHA};
use crate::sim::{generate, sample_mvn, CovSpec, SeedStream, Structure};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

pub const SUMMARY_SCHEMA: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "tplcov", version, about = "Sparse covariance estimation by truncated pairwise likelihood")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a sparse covariance matrix from a CSV data file.
    Estimate(EstimateArgs),
    /// Simulate a dataset and its true covariance.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo support-recovery benchmark.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Dense,
    Triplet,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Dense => MatrixFormat::Dense,
            FormatArg::Triplet => MatrixFormat::Triplet,
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Data file, one observation per row.
    #[arg(long)]
    pub input: PathBuf,
    /// Where to write the estimate.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "triplet")]
    pub format: FormatArg,
    /// Where to write the JSON summary; printed to stdout when omitted.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Significance level of the chi-square selection rule (default 0.1).
    #[arg(long, conflicts_with = "lambda")]
    pub alpha: Option<f64>,
    /// Fixed penalty level instead of data-driven selection.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Subtract column means before estimating.
    #[arg(long)]
    pub center: bool,
    #[arg(long, default_value_t = OptimizerConfig::default().tol)]
    pub tol: f64,
    #[arg(long, default_value_t = OptimizerConfig::default().max_sweeps)]
    pub max_sweeps: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `block` or `random`.
    #[arg(long)]
    pub structure: Structure,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub n: usize,
    /// Proportion of zero off-diagonal entries, in (0, 1).
    #[arg(long)]
    pub tau: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Data file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Triplet file for the true covariance.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Desk,
    Table1,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Named grid; individual grid flags override its lists.
    #[arg(long, value_enum)]
    pub profile: Option<ProfileArg>,
    #[arg(long, value_delimiter = ',')]
    pub structure: Vec<Structure>,
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub tau: Vec<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, env = "TPLCOV_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Machine-readable record of one estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema: u32,
    /// `alpha` when lambda was selected, `lambda` when it was given.
    pub mode: &'static str,
    pub p: usize,
    pub n: usize,
    pub lambda_hat: f64,
    /// Chi-square threshold; 0 in fixed-lambda mode.
    pub gamma: f64,
    /// Significance level; 0 in fixed-lambda mode.
    pub alpha: f64,
    pub support_size: usize,
    pub sweeps_total: usize,
    pub kkt_residual: f64,
    pub converged: bool,
    pub centered: bool,
}

fn exit_code(e: &TplError) -> i32 {
    match e {
        TplError::Argument(_) => EXIT_USAGE,
        TplError::Data(_) => EXIT_DATA,
        TplError::Domain(_)
        | TplError::Numeric(_)
        | TplError::NotConverged { .. }
        | TplError::Generation(_) => EXIT_NUMERIC,
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl From<TplError> for Failure {
    fn from(e: TplError) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_DATA,
        message: format!("cannot write {}: {e}", path.display()),
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Estimate(a) => cmd_estimate(a, out, err),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Benchmark(a) => cmd_benchmark(a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn cmd_estimate(a: &EstimateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let penalty = match (a.alpha, a.lambda) {
        (_, Some(l)) => {
            if !(l >= 0.0) {
                return Err(usage(format!("--lambda must be >= 0, got {l}")));
            }
            Penalty::Lambda(l)
        }
        (alpha, None) => {
            let alpha = alpha.unwrap_or(DEFAULT_ALPHA);
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(usage(format!("--alpha must lie in (0, 1), got {alpha}")));
            }
            Penalty::Alpha(alpha)
        }
    };
    let cfg = EstimateConfig {
        center: a.center,
        optimizer: OptimizerConfig {
            tol: a.tol,
            max_sweeps: a.max_sweeps,
        },
        ..EstimateConfig::default()
    };
    cfg.optimizer.validate()?;

    let data = read_data_file(&a.input)?;
    let fit = tpl_estimate(&data, penalty, &cfg)?;
    if !fit.converged {
        let _ = writeln!(err, "warning: coordinate descent hit the sweep cap at lambda = {}", fit.lambda_hat);
    }
    with_file(&a.output, |w| write_matrix(w, &fit.theta_hat, a.format.into()))
        .map_err(|e| io_failure(&a.output, e))?;

    let (mode, alpha) = match penalty {
        Penalty::Alpha(alpha) => ("alpha", alpha),
        _ => ("lambda", 0.0),
    };
    let summary = Summary {
        schema: SUMMARY_SCHEMA,
        mode,
        p: data.p(),
        n: data.n(),
        lambda_hat: fit.lambda_hat,
        gamma: fit.gamma.unwrap_or(0.0),
        alpha,
        support_size: fit.support_size(),
        sweeps_total: fit.sweeps_total,
        kkt_residual: fit.kkt_residual,
        converged: fit.converged,
        centered: a.center,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    match &a.summary {
        Some(path) => with_file(path, |w| writeln!(w, "{json}")).map_err(|e| io_failure(path, e))?,
        None => {
            let _ = writeln!(out, "{json}");
        }
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let spec = CovSpec::new(a.structure, a.p, a.tau)?;
    if a.n < 1 {
        return Err(usage("--n must be at least 1"));
    }
    let mut rng = SeedStream::new(a.seed).rng();
    let (theta, _) = generate(&spec, &mut rng)?;
    let data = sample_mvn(&theta, a.n, &mut rng)?;
    with_file(&a.out, |w| write_data_csv(w, &data)).map_err(|e| io_failure(&a.out, e))?;
    if let Some(path) = &a.truth {
        with_file(path, |w| write_matrix(w, &theta, MatrixFormat::Triplet)).map_err(|e| io_failure(path, e))?;
    }
    Ok(())
}

fn bench_config(a: &BenchmarkArgs) -> BenchConfig {
    let mut cfg = match a.profile {
        Some(ProfileArg::Table1) => BenchConfig::table1(),
        _ => BenchConfig::desk(),
    };
    if !a.structure.is_empty() {
        cfg.structures = a.structure.clone();
    }
    if !a.p.is_empty() {
        cfg.p_list = a.p.clone();
    }
    if !a.n.is_empty() {
        cfg.n_list = a.n.clone();
    }
    if !a.tau.is_empty() {
        cfg.tau_list = a.tau.clone();
    }
    if let Some(r) = a.reps {
        cfg.reps = r;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(al) = a.alpha {
        cfg.alpha = al;
    }
    cfg.threads = a.threads;
    cfg
}

fn cmd_benchmark(a: &BenchmarkArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let cfg = bench_config(a);
    cfg.validate()?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| io_failure(&a.out_dir, e))?;
    let result = run_benchmark(&cfg)?;

    let path = a.out_dir.join("results.csv");
    with_file(&path, |w| write_results_csv(w, &result.cells)).map_err(|e| io_failure(&path, e))?;
    let path = a.out_dir.join("replicates.csv");
    with_file(&path, |w| write_replicates_csv(w, &result.replicates)).map_err(|e| io_failure(&path, e))?;

    let _ = write!(out, "{}", render_table(&aggregate_to_table(&result.cells)));
    for c in result.cells.iter().filter(|c| c.reps_failed > 0) {
        let _ = writeln!(
            err,
            "warning: {} p={} n={} tau={}: {} of {} replicates failed",
            c.cell.structure, c.cell.p, c.cell.n, c.cell.tau, c.reps_failed, c.reps
        );
    }
    if result.cells.iter().all(|c| c.all_failed()) {
        return Err(Failure {
            code: EXIT_NUMERIC,
            message: "every replicate failed".into(),
        });
    }
    Ok(())
}
