//! Symmetric matrices, data matrices and the small amount of dense linear
//! algebra the estimator needs (Cholesky plus triangular solves).

use crate::error::{Result, TplError};
use crate::vech::VechIndex;

/// Pivots at or below this value are treated as a failed factorization.
pub const PIVOT_TOL: f64 = 1e-12;

/// Dense symmetric `p x p` matrix stored once, as its half-vectorization.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    index: VechIndex,
    vech: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(p: usize) -> Result<Self> {
        let index = VechIndex::new(p)?;
        Ok(Self {
            vech: vec![0.0; index.m()],
            index,
        })
    }

    pub fn identity(p: usize) -> Result<Self> {
        let mut s = Self::zeros(p)?;
        for j in 0..p {
            s.set(j, j, 1.0);
        }
        Ok(s)
    }

    /// Build from a half-vectorization in row-major upper-triangle order.
    pub fn from_vech(p: usize, vech: Vec<f64>) -> Result<Self> {
        let index = VechIndex::new(p)?;
        if vech.len() != index.m() {
            return Err(TplError::arg(format!(
                "vech of length {} does not match p = {p}",
                vech.len()
            )));
        }
        Ok(Self { index, vech })
    }

    /// Build from row slices; only the upper triangle is read.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let p = rows.len();
        let mut s = Self::zeros(p)?;
        for (j, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(TplError::arg("rows must form a square matrix"));
            }
            for k in j..p {
                s.set(j, k, row[k]);
            }
        }
        Ok(s)
    }

    pub fn p(&self) -> usize {
        self.index.p()
    }

    pub fn index(&self) -> &VechIndex {
        &self.index
    }

    pub fn vech(&self) -> &[f64] {
        &self.vech
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.vech[self.index.offset(j, k)]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, value: f64) {
        let o = self.index.offset(j, k);
        self.vech[o] = value;
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let p = self.p();
        let mut out = vec![0.0; p * p];
        for j in 0..p {
            for k in 0..p {
                out[j * p + k] = self.get(j, k);
            }
        }
        out
    }

    pub fn is_pd(&self) -> bool {
        cholesky_factor(self).is_ok()
    }
}

/// `n x p` observations, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n < 1 || p < 1 {
            return Err(TplError::data("data must have at least one row and one column"));
        }
        if values.len() != n * p {
            return Err(TplError::data(format!(
                "expected {} values for a {n} x {p} matrix, got {}",
                n * p,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(TplError::data(format!(
                "non-finite value at row {}, column {}",
                pos / p + 1,
                pos % p + 1
            )));
        }
        Ok(Self { n, p, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(TplError::data("rows have differing lengths"));
        }
        Self::new(rows.len(), p, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.p)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `S = (1/n) sum_i x_i x_i^T`, optionally after removing column means.
///
/// The divisor is always `n`.
pub fn sample_covariance(data: &DataMatrix, center: bool) -> Result<SymMatrix> {
    let (n, p) = (data.n(), data.p());
    if n < 2 {
        return Err(TplError::data(format!("need at least 2 observations, got {n}")));
    }
    let means: Vec<f64> = if center {
        let mut m = vec![0.0; p];
        for row in data.rows() {
            for (acc, x) in m.iter_mut().zip(row) {
                *acc += x;
            }
        }
        m.iter().map(|s| s / n as f64).collect()
    } else {
        vec![0.0; p]
    };

    let mut s = SymMatrix::zeros(p)?;
    let mut centered = vec![0.0; p];
    for row in data.rows() {
        for ((c, x), mu) in centered.iter_mut().zip(row).zip(&means) {
            *c = x - mu;
        }
        let mut o = 0;
        for j in 0..p {
            let xj = centered[j];
            for &xk in &centered[j..] {
                s.vech[o] += xj * xk;
                o += 1;
            }
        }
    }
    for v in s.vech.iter_mut() {
        *v /= n as f64;
    }
    Ok(s)
}

/// Lower-triangular Cholesky factor, row-major `p x p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    p: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.lower[j * self.p + k]
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// Smallest diagonal entry of the factor.
    pub fn min_pivot(&self) -> f64 {
        (0..self.p)
            .map(|j| self.get(j, j))
            .fold(f64::INFINITY, f64::min)
    }

    /// `y = L x`
    pub fn mul_lower(&self, x: &[f64], y: &mut [f64]) {
        for j in 0..self.p {
            let row = &self.lower[j * self.p..j * self.p + j + 1];
            y[j] = row.iter().zip(x).map(|(l, v)| l * v).sum();
        }
    }

    /// Solve `L L^T x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        forward_backward(&self.lower, self.p, b);
    }
}

/// Factor failure: the pivot (0-based) where positive definiteness broke down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotPositiveDefinite {
    pub pivot: usize,
    pub value: f64,
}

impl From<NotPositiveDefinite> for TplError {
    fn from(e: NotPositiveDefinite) -> Self {
        TplError::domain(format!(
            "matrix is not positive definite (pivot {} = {:e})",
            e.pivot + 1,
            e.value
        ))
    }
}

pub fn cholesky_factor(mat: &SymMatrix) -> std::result::Result<Cholesky, NotPositiveDefinite> {
    let mut dense = mat.to_dense();
    cholesky_in_place(&mut dense, mat.p())?;
    Ok(Cholesky {
        p: mat.p(),
        lower: dense,
    })
}

/// In-place Cholesky of a dense row-major symmetric matrix. On success the
/// lower triangle holds `L` and the strict upper triangle is zeroed.
pub(crate) fn cholesky_in_place(
    a: &mut [f64],
    n: usize,
) -> std::result::Result<(), NotPositiveDefinite> {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > PIVOT_TOL) {
            return Err(NotPositiveDefinite { pivot: j, value: d });
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for k in (j + 1)..n {
            a[j * n + k] = 0.0;
        }
    }
    Ok(())
}

fn forward_backward(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solve the dense symmetric positive definite system `A x = b`.
pub(crate) fn solve_spd(
    mut a: Vec<f64>,
    n: usize,
    mut b: Vec<f64>,
) -> std::result::Result<Vec<f64>, NotPositiveDefinite> {
    cholesky_in_place(&mut a, n)?;
    forward_backward(&a, n, &mut b);
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_covariance_examples() {
        let d = DataMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = sample_covariance(&d, false).unwrap();
        assert_eq!(s.vech(), &[0.5, 0.0, 0.5]);

        let d = DataMatrix::from_rows(&vec![vec![0.0; 3]; 5]).unwrap();
        let s = sample_covariance(&d, false).unwrap();
        assert!(s.vech().iter().all(|&v| v == 0.0));

        let d = DataMatrix::from_rows(&[vec![2.0, 2.0], vec![-2.0, -2.0]]).unwrap();
        let s = sample_covariance(&d, false).unwrap();
        assert_eq!(s.vech(), &[4.0, 4.0, 4.0]);
    }

    #[test]
    fn centering_removes_means() {
        let d = DataMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let s = sample_covariance(&d, true).unwrap();
        assert_eq!(s.vech(), &[1.0, 0.0, 0.0]);
        let s = sample_covariance(&d, false).unwrap();
        assert_eq!(s.vech(), &[5.0, 2.0, 1.0]);
    }

    #[test]
    fn data_errors() {
        assert!(DataMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DataMatrix::new(2, 2, vec![1.0; 3]).is_err());
        let one = DataMatrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(matches!(sample_covariance(&one, false), Err(TplError::Data(_))));
    }

    #[test]
    fn cholesky_examples() {
        let id = SymMatrix::identity(3).unwrap();
        let l = cholesky_factor(&id).unwrap();
        assert_eq!(l.lower(), id.to_dense().as_slice());

        let a = SymMatrix::from_rows(&[&[4.0, 2.0], &[2.0, 5.0]]).unwrap();
        let l = cholesky_factor(&a).unwrap();
        assert_eq!(l.lower(), &[2.0, 0.0, 1.0, 2.0]);

        let bad = SymMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        assert!(cholesky_factor(&bad).is_err());
        assert!(!bad.is_pd());
    }

    #[test]
    fn spd_solve() {
        let x = solve_spd(vec![4.0, 2.0, 2.0, 5.0], 2, vec![8.0, 9.0]).unwrap();
        // 4x + 2y = 8, 2x + 5y = 9 -> x = 1.375, y = 1.25
        assert!((x[0] - 1.375).abs() < 1e-14);
        assert!((x[1] - 1.25).abs() < 1e-14);
    }
}
