//! Weighted-L1 penalized quadratic criterion over score weights.
//!
//! The criterion is
//!
//! ```text
//! d(w) = 1/2 w' J w - w' diag(J) + (lambda / n) sum_{j<k} |w_jk| / S_jk^2
//! ```
//!
//! minimized by cyclic coordinate descent in storage order. Marginal weights
//! are unpenalized. Pairs with `S_jk == 0` carry an infinite penalty and are
//! held at zero.

use crate::error::{Result, TplError};
use crate::matrix::{solve_spd, SymMatrix};
use crate::scores::ScoreCov;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Convergence threshold on the largest absolute coordinate change in a sweep.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 10_000,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(TplError::arg("tol must be positive"));
        }
        if self.max_sweeps < 1 {
            return Err(TplError::arg("max_sweeps must be at least 1"));
        }
        Ok(())
    }
}

/// `sign(x) * max(|x| - t, 0)`
#[inline]
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Per-coordinate penalty weight `1 / (n S_jk^2)`; zero on the diagonal and
/// infinite where `S_jk == 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyWeights {
    weights: Vec<f64>,
}

impl PenaltyWeights {
    pub fn new(s: &SymMatrix, n: usize) -> Self {
        let idx = s.index();
        let weights = idx
            .iter()
            .map(|(_, j, k)| {
                if j == k {
                    0.0
                } else {
                    let sjk = s.get(j, k);
                    if sjk == 0.0 {
                        f64::INFINITY
                    } else {
                        1.0 / (n as f64 * sjk * sjk)
                    }
                }
            })
            .collect();
        Self { weights }
    }

    #[inline]
    pub fn get(&self, a: usize) -> f64 {
        self.weights[a]
    }

    #[inline]
    pub fn is_pinned(&self, a: usize) -> bool {
        self.weights[a].is_infinite()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }
}

/// Outcome of one coordinate descent run.
#[derive(Debug, Clone, PartialEq)]
pub struct CdResult {
    pub weights: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Value of the penalized criterion at `w`.
pub fn objective(w: &[f64], jcov: &ScoreCov, s: &SymMatrix, lambda: f64, n: usize) -> f64 {
    let pw = PenaltyWeights::new(s, n);
    let diag = jcov.diag();
    let mut quad = 0.0;
    let mut lin = 0.0;
    let mut pen = 0.0;
    for a in 0..jcov.m() {
        if w[a] == 0.0 {
            continue;
        }
        quad += w[a] * jcov.row_dot(a, w);
        lin += w[a] * diag[a];
        pen += w[a].abs() * pw.get(a);
    }
    0.5 * quad - lin + lambda * pen
}

/// Cyclic coordinate descent from `w_init`.
///
/// Marginal coordinates take the exact minimizer; pair coordinates are
/// soft-thresholded at `lambda / (n S_jk^2)` before scaling by `1/J_aa`.
pub fn coordinate_descent(
    jcov: &ScoreCov,
    s: &SymMatrix,
    lambda: f64,
    n: usize,
    w_init: &[f64],
    cfg: &OptimizerConfig,
) -> Result<CdResult> {
    cfg.validate()?;
    if !(lambda >= 0.0) {
        return Err(TplError::arg(format!("lambda must be >= 0, got {lambda}")));
    }
    let m = jcov.m();
    if w_init.len() != m {
        return Err(TplError::arg("initial weights have the wrong length"));
    }
    let diag = jcov.diag();
    if let Some(a) = diag.iter().position(|&d| !(d > 0.0)) {
        let (j, k) = jcov.index().pair_of(a);
        return Err(TplError::domain(format!(
            "score covariance diagonal at ({},{}) is not positive",
            j + 1,
            k + 1
        )));
    }
    let pw = PenaltyWeights::new(s, n);
    let mut w = w_init.to_vec();
    for a in 0..m {
        if pw.is_pinned(a) {
            w[a] = 0.0;
        }
    }

    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for a in 0..m {
            if pw.is_pinned(a) {
                continue;
            }
            let jaa = diag[a];
            // residual excluding coordinate a's own contribution
            let r = diag[a] - jcov.row_dot(a, &w) + jaa * w[a];
            let t = lambda * pw.get(a);
            let new = if t == 0.0 {
                r / jaa
            } else {
                soft_threshold(r, t) / jaa
            };
            max_change = max_change.max((new - w[a]).abs());
            w[a] = new;
        }
        if max_change <= cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(CdResult {
        weights: w,
        sweeps,
        converged,
    })
}

/// Solution of the penalized criterion restricted to `support` with the
/// subgradient fixed by `signs`.
///
/// `support` holds 0-based offsets; `signs[i]` is the sign of the weight at
/// `support[i]` and is ignored on diagonal offsets.
pub fn closed_form_restricted(
    jcov: &ScoreCov,
    s: &SymMatrix,
    lambda: f64,
    n: usize,
    support: &[usize],
    signs: &[f64],
) -> Result<Vec<f64>> {
    if support.len() != signs.len() {
        return Err(TplError::arg("support and signs differ in length"));
    }
    let idx = jcov.index();
    let pw = PenaltyWeights::new(s, n);
    let rhs: Vec<f64> = support
        .iter()
        .zip(signs)
        .map(|(&a, &sgn)| {
            let (j, k) = idx.pair_of(a);
            if j == k {
                jcov.diag()[a]
            } else {
                jcov.diag()[a] - lambda * pw.get(a) * sgn.signum()
            }
        })
        .collect();
    let sub = jcov.submatrix(support);
    let sol = solve_spd(sub, support.len(), rhs)
        .map_err(|e| TplError::numeric(format!("restricted system is singular at row {}", e.pivot + 1)))?;
    let mut w = vec![0.0; jcov.m()];
    for (&a, v) in support.iter().zip(sol) {
        w[a] = v;
    }
    Ok(w)
}

/// Largest violation of the optimality conditions at `w`.
pub fn kkt_residual(w: &[f64], jcov: &ScoreCov, s: &SymMatrix, lambda: f64, n: usize) -> f64 {
    let pw = PenaltyWeights::new(s, n);
    let diag = jcov.diag();
    let mut worst: f64 = 0.0;
    for a in 0..jcov.m() {
        let g = jcov.row_dot(a, w) - diag[a];
        let t = lambda * pw.get(a);
        let v = if pw.get(a) == 0.0 {
            g.abs()
        } else if pw.is_pinned(a) {
            if w[a] != 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else if w[a] != 0.0 {
            (g + t * w[a].signum()).abs()
        } else {
            (g.abs() - t).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Off-diagonal offsets with nonzero weight.
pub fn active_pairs(w: &[f64], jcov: &ScoreCov) -> Vec<usize> {
    let idx = jcov.index();
    idx.iter()
        .filter(|&(a, j, k)| j != k && w[a] != 0.0)
        .map(|(a, _, _)| a)
        .collect()
}
