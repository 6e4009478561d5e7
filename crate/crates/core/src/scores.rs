//! Marginal and bivariate Gaussian scores and their empirical covariance.
//!
//! Every score lives in the half-vectorized parameter space of length `m`.
//! A marginal score `u_jj` has one nonzero entry, at `(j,j)`; a bivariate
//! score `u_jk` has three, at `(j,j)`, `(k,k)` and `(j,k)`. Two scores can only
//! have a nonzero inner product when they share a variable, so the `m x m`
//! score covariance is stored row-wise with exactly those entries.

use crate::error::{Result, TplError};
use crate::matrix::{DataMatrix, SymMatrix};
use crate::vech::VechIndex;

/// A score vector with at most three nonzero entries, `(offset, value)` with
/// strictly increasing 0-based offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseScoreVector {
    entries: Vec<(usize, f64)>,
}

impl SparseScoreVector {
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dot(&self, other: &SparseScoreVector) -> f64 {
        let mut total = 0.0;
        for &(a, x) in &self.entries {
            for &(b, y) in &other.entries {
                if a == b {
                    total += x * y;
                }
            }
        }
        total
    }

    /// Expand to a dense length-`m` vector.
    pub fn to_dense(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for &(o, v) in &self.entries {
            out[o] = v;
        }
        out
    }
}

#[inline]
fn marginal_value(theta_jj: f64, x_j: f64) -> f64 {
    (x_j * x_j - theta_jj) / (theta_jj * theta_jj)
}

/// The three bivariate components `[u1, u2, u3]`, for the `(j,j)`, `(k,k)` and `(j,k)` positions.
///
/// These are the exact partial derivatives of
/// `l_jk = -log(det) - (tkk xj^2 - 2 tjk xj xk + tjj xk^2) / det`, the same
/// scale as the marginal score `(xj^2 - tjj) / tjj^2`.
#[inline]
fn bivariate_components(tjj: f64, tkk: f64, tjk: f64, xj: f64, xk: f64) -> [f64; 3] {
    let det = tjj * tkk - tjk * tjk;
    let denom = det * det;
    let (xj2, xk2, xjk) = (xj * xj, xk * xk, xj * xk);
    let tjk2 = tjk * tjk;
    let u1 = -(tjj * tkk * tkk - tkk * tjk2 - xk2 * tjk2 - xj2 * tkk * tkk
        + 2.0 * xjk * tjk * tkk)
        / denom;
    let u2 = -(tkk * tjj * tjj - tjj * tjk2 - xj2 * tjk2 - xk2 * tjj * tjj
        + 2.0 * xjk * tjk * tjj)
        / denom;
    let u3 = -2.0
        * (tjk2 * tjk - tjk * tjj * tkk + xj2 * tjk * tkk + xk2 * tjk * tjj
            - xjk * (tjj * tkk + tjk2))
        / denom;
    [u1, u2, u3]
}

fn check_marginal(theta: &SymMatrix, j: usize) -> Result<f64> {
    let t = theta.get(j, j);
    if !(t > 0.0) {
        return Err(TplError::domain(format!(
            "variance of variable {} is not positive ({t})",
            j + 1
        )));
    }
    Ok(t)
}

fn check_pair(theta: &SymMatrix, j: usize, k: usize) -> Result<(f64, f64, f64)> {
    let (tjj, tkk, tjk) = (theta.get(j, j), theta.get(k, k), theta.get(j, k));
    let det = tjj * tkk - tjk * tjk;
    if !(det > 0.0) || !(tjj > 0.0) {
        return Err(TplError::domain(format!(
            "2x2 block for pair ({},{}) is not positive definite (determinant {det})",
            j + 1,
            k + 1
        )));
    }
    Ok((tjj, tkk, tjk))
}

/// Marginal score of variable `j` (0-based) at parameter `theta`.
pub fn marginal_score(theta: &SymMatrix, j: usize, x: &[f64]) -> Result<SparseScoreVector> {
    if j >= theta.p() || x.len() != theta.p() {
        return Err(TplError::arg("variable index or observation length mismatch"));
    }
    let t = check_marginal(theta, j)?;
    Ok(SparseScoreVector {
        entries: vec![(theta.index().offset(j, j), marginal_value(t, x[j]))],
    })
}

/// Bivariate score of the pair `j < k` (0-based) at parameter `theta`.
pub fn pairwise_score(
    theta: &SymMatrix,
    j: usize,
    k: usize,
    x: &[f64],
) -> Result<SparseScoreVector> {
    if j >= k || k >= theta.p() || x.len() != theta.p() {
        return Err(TplError::arg("pair must satisfy j < k < p"));
    }
    let (tjj, tkk, tjk) = check_pair(theta, j, k)?;
    let [u1, u2, u3] = bivariate_components(tjj, tkk, tjk, x[j], x[k]);
    let idx = theta.index();
    Ok(SparseScoreVector {
        entries: vec![
            (idx.offset(j, j), u1),
            (idx.offset(j, k), u3),
            (idx.offset(k, k), u2),
        ],
    })
}

/// Score vector with 0-based offset `a` (marginal when `a` is diagonal).
pub fn score_at(theta: &SymMatrix, a: usize, x: &[f64]) -> Result<SparseScoreVector> {
    let (j, k) = theta.index().pair_of(a);
    if j == k {
        marginal_score(theta, j, x)
    } else {
        pairwise_score(theta, j, k, x)
    }
}

/// Empirical score covariance `J = (1/n) sum_i U_i^T U_i`, stored in
/// compressed rows over its structural nonzeros.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreCov {
    index: VechIndex,
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl ScoreCov {
    pub fn index(&self) -> &VechIndex {
        &self.index
    }

    pub fn m(&self) -> usize {
        self.index.m()
    }

    /// Sample size the covariance was averaged over.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `diag(J)`.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Stored row `a` (0-based): sorted column offsets and values, diagonal included.
    #[inline]
    pub fn row(&self, a: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[a], self.row_ptr[a + 1]);
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    /// Entry `(a, b)`; zero when structurally absent.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        let (cols, vals) = self.row(a);
        cols.binary_search(&b).map_or(0.0, |i| vals[i])
    }

    pub fn is_stored(&self, a: usize, b: usize) -> bool {
        self.row(a).0.binary_search(&b).is_ok()
    }

    /// `J_{a,.} w`
    #[inline]
    pub fn row_dot(&self, a: usize, w: &[f64]) -> f64 {
        let (cols, vals) = self.row(a);
        cols.iter().zip(vals).map(|(&b, v)| v * w[b]).sum()
    }

    /// Dense row-major `m x m` copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let m = self.m();
        let mut out = vec![0.0; m * m];
        for a in 0..m {
            let (cols, vals) = self.row(a);
            for (&b, &v) in cols.iter().zip(vals) {
                out[a * m + b] = v;
            }
        }
        out
    }

    /// Dense principal submatrix on `rows` (0-based offsets).
    pub fn submatrix(&self, rows: &[usize]) -> Vec<f64> {
        let r = rows.len();
        let mut out = vec![0.0; r * r];
        for (i, &a) in rows.iter().enumerate() {
            for (j, &b) in rows.iter().enumerate() {
                out[i * r + j] = self.get(a, b);
            }
        }
        out
    }
}

/// Build `J` from the data with every score evaluated at `theta = vech(S)`.
pub fn build_score_covariance(data: &DataMatrix, s: &SymMatrix) -> Result<ScoreCov> {
    let p = s.p();
    if data.p() != p {
        return Err(TplError::arg(format!(
            "data has {} columns but covariance is {p} x {p}",
            data.p()
        )));
    }
    for j in 0..p {
        check_marginal(s, j)?;
        for k in (j + 1)..p {
            check_pair(s, j, k)?;
        }
    }
    let index = *s.index();
    let n = data.n();

    // For each variable d, accumulate the Gram matrix of every score's
    // component at position (d,d). Slot d holds the marginal score; slot l != d
    // holds the bivariate score of the pair {d, l}.
    let mut gram = vec![0.0; p * p * p];
    let mut offdiag_sq = vec![0.0; index.m()];
    let mut comp = vec![0.0; p * p];
    for x in data.rows() {
        for j in 0..p {
            comp[j * p + j] = marginal_value(s.get(j, j), x[j]);
        }
        for j in 0..p {
            for k in (j + 1)..p {
                let [u1, u2, u3] =
                    bivariate_components(s.get(j, j), s.get(k, k), s.get(j, k), x[j], x[k]);
                comp[j * p + k] = u1;
                comp[k * p + j] = u2;
                offdiag_sq[index.offset(j, k)] += u3 * u3;
            }
        }
        for d in 0..p {
            let c = &comp[d * p..(d + 1) * p];
            let g = &mut gram[d * p * p..(d + 1) * p * p];
            for a in 0..p {
                let ca = c[a];
                for b in a..p {
                    g[a * p + b] += ca * c[b];
                }
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    for d in 0..p {
        let g = &mut gram[d * p * p..(d + 1) * p * p];
        for a in 0..p {
            for b in a..p {
                let v = g[a * p + b] * inv_n;
                g[a * p + b] = v;
                g[b * p + a] = v;
            }
        }
    }
    for v in offdiag_sq.iter_mut() {
        *v *= inv_n;
    }

    let g = |d: usize, a: usize, b: usize| gram[d * p * p + a * p + b];
    let m = index.m();
    let mut row_ptr = Vec::with_capacity(m + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut diag = vec![0.0; m];
    row_ptr.push(0);
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(2 * p);
    for (a, j, k) in index.iter() {
        row.clear();
        if j == k {
            for l in 0..p {
                row.push((index.offset(j, l), g(j, j, l)));
            }
        } else {
            for l in 0..p {
                if l != k {
                    row.push((index.offset(j, l), g(j, k, l)));
                }
            }
            for l in 0..p {
                if l != j {
                    row.push((index.offset(k, l), g(k, j, l)));
                }
            }
            // the pair itself shares both variables plus the (j,k) position
            row.push((a, g(j, k, k) + g(k, j, j) + offdiag_sq[a]));
        }
        row.sort_unstable_by_key(|&(b, _)| b);
        for &(b, v) in &row {
            if b == a {
                diag[a] = v;
            }
            cols.push(b);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    Ok(ScoreCov {
        index,
        n,
        row_ptr,
        cols,
        vals,
        diag,
    })
}
