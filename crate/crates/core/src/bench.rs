//! Monte Carlo support-recovery experiments.
//!
//! Each replicate draws a truth, samples data, fits, and scores the recovered
//! support. Replicate `r` of a cell always runs on the stream
//! `master.derive([structure, p, n, tau, r])`, and results are collected in
//! `(cell, r)` order, so aggregates do not depend on the thread count.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, TplError};
use crate::select::{tpl_estimate, EstimateConfig, Penalty, DEFAULT_ALPHA};
use crate::sim::{generate, sample_mvn, support_metrics, CovSpec, SeedStream, Structure, TruthSupport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub structure: Structure,
    pub p: usize,
    pub n: usize,
    pub tau: f64,
}

impl Cell {
    fn stream_key(&self) -> [u64; 4] {
        [
            self.structure.code(),
            self.p as u64,
            self.n as u64,
            self.tau.to_bits(),
        ]
    }

    pub fn stream(&self, master: SeedStream, rep: usize) -> SeedStream {
        let [a, b, c, d] = self.stream_key();
        master.derive(&[a, b, c, d, rep as u64])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub structures: Vec<Structure>,
    pub p_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub tau_list: Vec<f64>,
    pub reps: usize,
    pub alpha: f64,
    pub master_seed: u64,
    /// Worker threads; `None` lets the pool decide.
    pub threads: Option<usize>,
    pub estimate: EstimateConfig,
}

impl BenchConfig {
    /// Laptop-sized grid: both structures, p in {20, 50}, n in {40, 100, 250}, tau in {0.5, 0.9}, 50 replicates.
    pub fn desk() -> Self {
        Self {
            structures: vec![Structure::BlockDiagonal, Structure::SparseRandom],
            p_list: vec![20, 50],
            n_list: vec![40, 100, 250],
            tau_list: vec![0.5, 0.9],
            reps: 50,
            alpha: DEFAULT_ALPHA,
            master_seed: 1,
            threads: None,
            estimate: EstimateConfig::default(),
        }
    }

    /// The full grid: p up to 150 and 100 replicates per cell.
    pub fn table1() -> Self {
        Self {
            p_list: vec![20, 50, 150],
            reps: 100,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(TplError::arg("reps must be at least 1"));
        }
        if self.structures.is_empty()
            || self.p_list.is_empty()
            || self.n_list.is_empty()
            || self.tau_list.is_empty()
        {
            return Err(TplError::arg("every grid list must be nonempty"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(TplError::arg("alpha must lie in (0, 1)"));
        }
        if self.threads == Some(0) {
            return Err(TplError::arg("threads must be at least 1"));
        }
        for &p in &self.p_list {
            for &tau in &self.tau_list {
                CovSpec::new(Structure::BlockDiagonal, p, tau)?;
            }
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n < 2) {
            return Err(TplError::arg(format!("n must be at least 2, got {n}")));
        }
        Ok(())
    }

    /// Cells in grid order: structure, tau, p, n.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &structure in &self.structures {
            for &tau in &self.tau_list {
                for &p in &self.p_list {
                    for &n in &self.n_list {
                        cells.push(Cell { structure, p, n, tau });
                    }
                }
            }
        }
        cells
    }
}

/// One replicate's metrics and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateOutcome {
    pub sn: Option<f64>,
    pub sp: Option<f64>,
    pub ac: f64,
    pub lambda_hat: f64,
    pub support_size: usize,
    pub kkt_residual: f64,
    pub m0: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub cell: Cell,
    pub rep: usize,
    pub outcome: std::result::Result<ReplicateOutcome, TplError>,
}

/// Generate a truth, sample, fit and score one replicate.
pub fn run_replicate(cell: &Cell, alpha: f64, stream: SeedStream, cfg: &EstimateConfig) -> Result<ReplicateOutcome> {
    let spec = CovSpec::new(cell.structure, cell.p, cell.tau)?;
    let mut rng = stream.rng();
    let (theta, truth) = generate(&spec, &mut rng)?;
    let data = sample_mvn(&theta, cell.n, &mut rng)?;
    let fit = tpl_estimate(&data, Penalty::Alpha(alpha), cfg)?;
    let estimate = TruthSupport::from_pairs(fit.support.iter().copied());
    let metrics = support_metrics(&estimate, &truth, cell.p);
    Ok(ReplicateOutcome {
        sn: metrics.sn,
        sp: metrics.sp,
        ac: metrics.ac,
        lambda_hat: fit.lambda_hat,
        support_size: fit.support_size(),
        kkt_residual: fit.kkt_residual,
        m0: truth.m0(),
    })
}

/// Mean and Monte Carlo standard error of the defined values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub se: Option<f64>,
    pub count: usize,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        let count = values.len();
        if count == 0 {
            return Self { mean: None, se: None, count };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let se = (count > 1).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        });
        Self {
            mean: Some(mean),
            se,
            count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub cell: Cell,
    pub reps: usize,
    pub reps_used: usize,
    pub reps_failed: usize,
    pub sn: Summary,
    pub sp: Summary,
    pub ac: Summary,
    pub mean_lambda_hat: Option<f64>,
    pub mean_support_size: Option<f64>,
}

impl CellResult {
    pub fn all_failed(&self) -> bool {
        self.reps_used == 0
    }

    fn from_records(cell: Cell, records: &[ReplicateRecord]) -> Self {
        let ok: Vec<&ReplicateOutcome> = records.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
        let mean = |f: &dyn Fn(&ReplicateOutcome) -> f64| Summary::of(ok.iter().map(|o| f(o))).mean;
        CellResult {
            cell,
            reps: records.len(),
            reps_used: ok.len(),
            reps_failed: records.len() - ok.len(),
            sn: Summary::of(ok.iter().filter_map(|o| o.sn)),
            sp: Summary::of(ok.iter().filter_map(|o| o.sp)),
            ac: Summary::of(ok.iter().map(|o| o.ac)),
            mean_lambda_hat: mean(&|o| o.lambda_hat),
            mean_support_size: mean(&|o| o.support_size as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutput {
    pub cells: Vec<CellResult>,
    pub replicates: Vec<ReplicateRecord>,
}

/// Run every cell of the grid.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchOutput> {
    cfg.validate()?;
    let master = SeedStream::new(cfg.master_seed);
    let cells = cfg.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.reps).map(move |r| (c, r)))
        .collect();

    let run = || -> Vec<ReplicateRecord> {
        jobs.par_iter()
            .map(|&(c, r)| {
                let cell = cells[c];
                ReplicateRecord {
                    cell,
                    rep: r,
                    outcome: run_replicate(&cell, cfg.alpha, cell.stream(master, r), &cfg.estimate),
                }
            })
            .collect()
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| TplError::numeric(format!("could not start thread pool: {e}")))?;
    let replicates = pool.install(run);

    let results = replicates
        .chunks(cfg.reps)
        .zip(&cells)
        .map(|(records, &cell)| CellResult::from_records(cell, records))
        .collect();
    Ok(BenchOutput {
        cells: results,
        replicates,
    })
}

/// One displayed row: a (structure, tau, p) combination with SN/SP/AC per n.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub structure: Structure,
    pub tau: f64,
    pub p: usize,
    /// `(n, SN, SP, AC)` with n ascending.
    pub columns: Vec<(usize, Option<f64>, Option<f64>, Option<f64>)>,
}

/// Arrange cell results as rows sorted by structure, tau and p.
pub fn aggregate_to_table(results: &[CellResult]) -> Vec<TableRow> {
    let mut rows: Vec<TableRow> = Vec::new();
    let mut sorted: Vec<&CellResult> = results.iter().collect();
    sorted.sort_by(|a, b| {
        a.cell
            .structure
            .cmp(&b.cell.structure)
            .then(a.cell.tau.total_cmp(&b.cell.tau))
            .then(a.cell.p.cmp(&b.cell.p))
            .then(a.cell.n.cmp(&b.cell.n))
    });
    for r in sorted {
        let col = (r.cell.n, r.sn.mean, r.sp.mean, r.ac.mean);
        match rows.last_mut() {
            Some(last)
                if last.structure == r.cell.structure && last.tau == r.cell.tau && last.p == r.cell.p =>
            {
                last.columns.push(col)
            }
            _ => rows.push(TableRow {
                structure: r.cell.structure,
                tau: r.cell.tau,
                p: r.cell.p,
                columns: vec![col],
            }),
        }
    }
    rows
}

fn cell2(v: Option<f64>) -> String {
    v.map_or_else(|| "  -  ".to_string(), |x| format!("{x:5.2}"))
}

/// Plain-text table, SN, SP and AC blocks side by side, two decimals.
pub fn render_table(rows: &[TableRow]) -> String {
    let mut out = String::new();
    if rows.is_empty() {
        return out;
    }
    let ns: Vec<usize> = rows[0].columns.iter().map(|c| c.0).collect();
    let block = |label: &str| {
        let mut s = format!("{label:<width$}", width = 6 * ns.len());
        s.push_str(" | ");
        s
    };
    out.push_str(&format!("{:<8}{:>6}{:>6} | ", "struct", "tau", "p"));
    for l in ["SN", "SP", "AC"] {
        out.push_str(&block(l));
    }
    out.push('\n');
    out.push_str(&format!("{:<8}{:>6}{:>6} | ", "", "", "n"));
    for _ in 0..3 {
        for n in &ns {
            out.push_str(&format!("{n:>5} "));
        }
        out.push_str(" | ");
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!("{:<8}{:>6}{:>6} | ", row.structure.name(), row.tau, row.p));
        for pick in 0..3 {
            for c in &row.columns {
                let v = [c.1, c.2, c.3][pick];
                out.push_str(&cell2(v));
                out.push(' ');
            }
            out.push_str(" | ");
        }
        out.push('\n');
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per cell, full precision; missing values are empty fields.
pub fn write_results_csv<W: Write>(out: W, results: &[CellResult]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "structure", "p", "n", "tau", "reps", "reps_used", "reps_failed", "mean_sn", "se_sn", "n_sn",
        "mean_sp", "se_sp", "n_sp", "mean_ac", "se_ac", "mean_lambda_hat", "mean_support_size",
    ])?;
    for r in results {
        w.write_record([
            r.cell.structure.name().to_string(),
            r.cell.p.to_string(),
            r.cell.n.to_string(),
            r.cell.tau.to_string(),
            r.reps.to_string(),
            r.reps_used.to_string(),
            r.reps_failed.to_string(),
            opt(r.sn.mean),
            opt(r.sn.se),
            r.sn.count.to_string(),
            opt(r.sp.mean),
            opt(r.sp.se),
            r.sp.count.to_string(),
            opt(r.ac.mean),
            opt(r.ac.se),
            opt(r.mean_lambda_hat),
            opt(r.mean_support_size),
        ])?;
    }
    w.flush()
}

/// One row per replicate, with the error text for failed ones.
pub fn write_replicates_csv<W: Write>(out: W, records: &[ReplicateRecord]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "structure", "p", "n", "tau", "rep", "status", "sn", "sp", "ac", "lambda_hat", "support_size",
        "kkt_residual", "m0", "error",
    ])?;
    for r in records {
        let head = [
            r.cell.structure.name().to_string(),
            r.cell.p.to_string(),
            r.cell.n.to_string(),
            r.cell.tau.to_string(),
            r.rep.to_string(),
        ];
        let tail: [String; 9] = match &r.outcome {
            Ok(o) => [
                "ok".into(),
                opt(o.sn),
                opt(o.sp),
                o.ac.to_string(),
                o.lambda_hat.to_string(),
                o.support_size.to_string(),
                o.kkt_residual.to_string(),
                o.m0.to_string(),
                String::new(),
            ],
            Err(e) => [
                "failed".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.to_string(),
            ],
        };
        w.write_record(head.iter().chain(tail.iter()))?;
    }
    w.flush()
}
