//! Penalty selection, the thresholded estimator and adjusted standard errors.
//!
//! The penalty level is the smallest `lambda` at which every selected pair
//! passes the marginal test `n S_jk^2 / (S_jk^2 + S_jj S_kk) > gamma`, where
//! `gamma` is a chi-square(1) quantile. The search is a bisection on that
//! predicate between zero and the level at which no pair is selected.

use serde::Serialize;

use crate::error::{Result, TplError};
use crate::matrix::{sample_covariance, solve_spd, DataMatrix, SymMatrix};
use crate::optimizer::{active_pairs, coordinate_descent, kkt_residual, CdResult, OptimizerConfig};
use crate::quantile::chisq1_quantile;
use crate::scores::{build_score_covariance, ScoreCov};

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_SEARCH_TOL: f64 = 1e-3;

/// Hard cap on bisection probes; relative tolerance 1e-3 needs far fewer.
const MAX_PROBES: usize = 200;

/// Result of a fit: thresholded covariance, weights and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TplFit {
    pub theta_hat: SymMatrix,
    pub weights: Vec<f64>,
    /// Selected off-diagonal pairs `(j, k)`, 0-based, `j < k`, in storage order.
    pub support: Vec<(usize, usize)>,
    pub lambda_hat: f64,
    /// Chi-square threshold used by the selection rule; `None` for a fixed penalty.
    pub gamma: Option<f64>,
    pub sweeps_total: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

impl TplFit {
    pub fn support_size(&self) -> usize {
        self.support.len()
    }
}

/// How the penalty level is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    /// Select lambda by the chi-square rule at significance level alpha.
    Alpha(f64),
    /// Select lambda by the chi-square rule with this threshold directly.
    Gamma(f64),
    /// Use this lambda directly.
    Lambda(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateConfig {
    /// Subtract column means before forming `S`.
    pub center: bool,
    pub optimizer: OptimizerConfig,
    /// Relative tolerance of the lambda bisection.
    pub search_tol: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            center: false,
            optimizer: OptimizerConfig::default(),
            search_tol: DEFAULT_SEARCH_TOL,
        }
    }
}

/// `n S_jk^2 / (S_jk^2 + S_jj S_kk)`, asymptotically chi-square(1) when `theta_jk = 0`.
pub fn chi_square_stat(s: &SymMatrix, j: usize, k: usize, n: usize) -> Result<f64> {
    let (sjj, skk, sjk) = (s.get(j, j), s.get(k, k), s.get(j, k));
    if !(sjj > 0.0 && skk > 0.0) {
        return Err(TplError::domain(format!(
            "zero variance in pair ({},{})",
            j + 1,
            k + 1
        )));
    }
    Ok(n as f64 * sjk * sjk / (sjk * sjk + sjj * skk))
}

/// Weights minimizing the criterion when every pair weight is zero: the
/// marginal block solved exactly, pairs left at zero.
pub fn diagonal_solution(jcov: &ScoreCov) -> Result<Vec<f64>> {
    let idx = jcov.index();
    let diag_offsets: Vec<usize> = (0..idx.p()).map(|j| idx.offset(j, j)).collect();
    let sub = jcov.submatrix(&diag_offsets);
    let rhs: Vec<f64> = diag_offsets.iter().map(|&a| jcov.diag()[a]).collect();
    let sol = solve_spd(sub, diag_offsets.len(), rhs)
        .map_err(|_| TplError::numeric("marginal block of the score covariance is singular"))?;
    let mut w = vec![0.0; jcov.m()];
    for (&a, v) in diag_offsets.iter().zip(sol) {
        w[a] = v;
    }
    Ok(w)
}

/// Smallest penalty at which no pair is selected.
pub fn lambda_max(jcov: &ScoreCov, s: &SymMatrix, n: usize) -> Result<f64> {
    let w = diagonal_solution(jcov)?;
    let diag = jcov.diag();
    let mut best: f64 = 0.0;
    for (a, j, k) in jcov.index().iter() {
        if j == k {
            continue;
        }
        let sjk = s.get(j, k);
        let grad = (diag[a] - jcov.row_dot(a, &w)).abs();
        best = best.max(n as f64 * sjk * sjk * grad);
    }
    Ok(best)
}

fn support_of(w: &[f64], jcov: &ScoreCov) -> Vec<(usize, usize)> {
    let idx = jcov.index();
    active_pairs(w, jcov)
        .into_iter()
        .map(|a| idx.pair_of(a))
        .collect()
}

fn passes_chi_square(support: &[(usize, usize)], s: &SymMatrix, n: usize, gamma: f64) -> Result<bool> {
    for &(j, k) in support {
        // a tie with gamma fails
        if !(chi_square_stat(s, j, k, n)? > gamma) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Assemble a fit from converged (or capped) weights.
pub fn assemble_fit(
    jcov: &ScoreCov,
    s: &SymMatrix,
    n: usize,
    lambda: f64,
    gamma: Option<f64>,
    cd: CdResult,
    sweeps_total: usize,
) -> TplFit {
    let support = support_of(&cd.weights, jcov);
    let mut theta_hat = SymMatrix::zeros(s.p()).expect("p >= 1");
    for j in 0..s.p() {
        theta_hat.set(j, j, s.get(j, j));
    }
    for &(j, k) in &support {
        theta_hat.set(j, k, s.get(j, k));
    }
    let kkt = kkt_residual(&cd.weights, jcov, s, lambda, n);
    TplFit {
        theta_hat,
        weights: cd.weights,
        support,
        lambda_hat: lambda,
        gamma,
        sweeps_total,
        kkt_residual: kkt,
        converged: cd.converged,
    }
}

/// Fit at a fixed penalty, starting from the marginal-only solution.
pub fn fit_at_lambda(
    jcov: &ScoreCov,
    s: &SymMatrix,
    n: usize,
    lambda: f64,
    cfg: &OptimizerConfig,
) -> Result<TplFit> {
    let w0 = diagonal_solution(jcov)?;
    let cd = coordinate_descent(jcov, s, lambda, n, &w0, cfg)?;
    let sweeps = cd.sweeps;
    Ok(assemble_fit(jcov, s, n, lambda, None, cd, sweeps))
}

/// Smallest lambda (to relative tolerance `search_tol`) whose selected pairs
/// all exceed `gamma`, and the fit at that lambda.
pub fn select_lambda(
    jcov: &ScoreCov,
    s: &SymMatrix,
    n: usize,
    gamma: f64,
    search_tol: f64,
    cfg: &OptimizerConfig,
) -> Result<TplFit> {
    if !(gamma > 0.0) {
        return Err(TplError::arg(format!("gamma must be positive, got {gamma}")));
    }
    if !(search_tol > 0.0 && search_tol <= 0.1) {
        return Err(TplError::arg(format!(
            "search tolerance must lie in (0, 0.1], got {search_tol}"
        )));
    }
    let mut sweeps_total = 0;
    let mut warm = diagonal_solution(jcov)?;
    let probe = |lambda: f64, warm: &mut Vec<f64>, sweeps_total: &mut usize| -> Result<(CdResult, bool)> {
        let cd = coordinate_descent(jcov, s, lambda, n, warm, cfg)?;
        *sweeps_total += cd.sweeps;
        if !cd.converged {
            return Err(TplError::NotConverged {
                lambda,
                sweeps: cd.sweeps,
            });
        }
        warm.clone_from(&cd.weights);
        let ok = passes_chi_square(&support_of(&cd.weights, jcov), s, n, gamma)?;
        Ok((cd, ok))
    };

    let (zero_cd, zero_ok) = probe(0.0, &mut warm, &mut sweeps_total)?;
    let lmax = lambda_max(jcov, s, n)?;
    if zero_ok || lmax == 0.0 {
        if !zero_ok {
            return Err(TplError::numeric("no feasible penalty level"));
        }
        return Ok(assemble_fit(jcov, s, n, 0.0, Some(gamma), zero_cd, sweeps_total));
    }

    // at lambda_max the marginal-only weights are the exact solution; running
    // CD there can stop a rounding error short of zero on the boundary pair
    let mut hi_cd = CdResult {
        weights: diagonal_solution(jcov)?,
        sweeps: 0,
        converged: true,
    };
    let (mut lo, mut hi) = (0.0, lmax);
    let mut probes = 0;
    while hi - lo > search_tol * hi && probes < MAX_PROBES {
        probes += 1;
        let mid = 0.5 * (lo + hi);
        let (cd, ok) = probe(mid, &mut warm, &mut sweeps_total)?;
        if ok {
            hi = mid;
            hi_cd = cd;
        } else {
            lo = mid;
        }
    }
    Ok(assemble_fit(jcov, s, n, hi, Some(gamma), hi_cd, sweeps_total))
}

/// Full pipeline: sample covariance, score covariance, penalty choice, thresholding.
pub fn tpl_estimate(data: &DataMatrix, penalty: Penalty, cfg: &EstimateConfig) -> Result<TplFit> {
    let s = sample_covariance(data, cfg.center)?;
    let jcov = build_score_covariance(data, &s)?;
    let n = data.n();
    match penalty {
        Penalty::Alpha(alpha) => {
            let gamma = chisq1_quantile(alpha)?;
            select_lambda(&jcov, &s, n, gamma, cfg.search_tol, &cfg.optimizer)
        }
        Penalty::Gamma(gamma) => select_lambda(&jcov, &s, n, gamma, cfg.search_tol, &cfg.optimizer),
        Penalty::Lambda(lambda) => {
            if !(lambda >= 0.0) {
                return Err(TplError::arg(format!("lambda must be >= 0, got {lambda}")));
            }
            fit_at_lambda(&jcov, &s, n, lambda, &cfg.optimizer)
        }
    }
}

/// Adjusted standard error of a pair, or the adjusted information when it is not positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AdjustedSe {
    Finite(f64),
    NonpositiveInformation(f64),
}

impl AdjustedSe {
    pub fn value(&self) -> Option<f64> {
        match *self {
            AdjustedSe::Finite(v) => Some(v),
            AdjustedSe::NonpositiveInformation(_) => None,
        }
    }
}

/// Score information of pair `(j,k)` left after removing its covariance with
/// the other weighted scores: `var(u_jk) - cov(u_jk, sum_{st != jk} w_st u_st)`.
pub fn adjusted_information(jcov: &ScoreCov, weights: &[f64], j: usize, k: usize) -> f64 {
    let a = jcov.index().offset(j, k);
    let var = jcov.diag()[a];
    let cov = jcov.row_dot(a, weights) - var * weights[a];
    var - cov
}

/// `n^{-1/2} (var - cov)^{-1/2}` for the pair `(j,k)`.
pub fn adjusted_se(jcov: &ScoreCov, weights: &[f64], j: usize, k: usize) -> AdjustedSe {
    let info = adjusted_information(jcov, weights, j, k);
    if info > 0.0 {
        AdjustedSe::Finite(1.0 / ((jcov.n() as f64).sqrt() * info.sqrt()))
    } else {
        AdjustedSe::NonpositiveInformation(info)
    }
}

/// `n S_jk^2 |var - cov|`: a pair is selected at level lambda exactly when
/// this reaches lambda (up to the solver tolerance).
pub fn adjusted_statistic(jcov: &ScoreCov, s: &SymMatrix, weights: &[f64], j: usize, k: usize) -> f64 {
    let sjk = s.get(j, k);
    jcov.n() as f64 * sjk * sjk * adjusted_information(jcov, weights, j, k).abs()
}
