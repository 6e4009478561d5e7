//! Synthetic covariance structures, Gaussian sampling and support-recovery metrics.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::Serialize;

use crate::error::{Result, TplError};
use crate::matrix::{cholesky_factor, DataMatrix, SymMatrix};

const BLOCK_SHRINK: f64 = 0.95;
const RANDOM_SHRINK: f64 = 0.9;
const MAX_SHRINKS: usize = 50;

/// A reproducible random stream.
///
/// Streams are ChaCha8 generators keyed by a 64-bit seed; child streams are
/// derived by folding extra keys into the seed with the SplitMix64 finalizer,
/// so `derive(&[cell, r])` gives replicate `r` of a cell its own generator no
/// matter which thread runs it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream(u64);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn seed(&self) -> u64 {
        self.0
    }

    pub fn derive(&self, keys: &[u64]) -> Self {
        let mut state = splitmix64(self.0);
        for &k in keys {
            state = splitmix64(state ^ splitmix64(k));
        }
        Self(state)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    BlockDiagonal,
    SparseRandom,
}

impl Structure {
    pub fn name(&self) -> &'static str {
        match self {
            Structure::BlockDiagonal => "block",
            Structure::SparseRandom => "random",
        }
    }

    pub(crate) fn code(&self) -> u64 {
        match self {
            Structure::BlockDiagonal => 1,
            Structure::SparseRandom => 2,
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Structure {
    type Err = TplError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block" | "block_diagonal" => Ok(Structure::BlockDiagonal),
            "random" | "sparse_random" => Ok(Structure::SparseRandom),
            other => Err(TplError::arg(format!("unknown structure '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovSpec {
    pub structure: Structure,
    pub p: usize,
    /// Proportion of zero off-diagonal entries.
    pub tau: f64,
}

impl CovSpec {
    pub fn new(structure: Structure, p: usize, tau: f64) -> Result<Self> {
        if p < 2 {
            return Err(TplError::arg(format!("p must be at least 2, got {p}")));
        }
        if !(tau > 0.0 && tau < 1.0) {
            return Err(TplError::arg(format!("tau must lie in (0, 1), got {tau}")));
        }
        Ok(Self { structure, p, tau })
    }
}

/// Off-diagonal pairs `(j, k)`, 0-based with `j < k`, where the truth is nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TruthSupport {
    pairs: BTreeSet<(usize, usize)>,
}

impl TruthSupport {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self {
            pairs: pairs
                .into_iter()
                .map(|(j, k)| if j < k { (j, k) } else { (k, j) })
                .filter(|(j, k)| j != k)
                .collect(),
        }
    }

    /// Nonzero off-diagonal pattern of a matrix.
    pub fn of_matrix(theta: &SymMatrix) -> Self {
        Self::from_pairs(
            theta
                .index()
                .iter()
                .filter(|&(_, j, k)| j != k && theta.get(j, k) != 0.0)
                .map(|(_, j, k)| (j, k)),
        )
    }

    pub fn m0(&self) -> usize {
        self.pairs.len()
    }

    pub fn contains(&self, j: usize, k: usize) -> bool {
        let key = if j < k { (j, k) } else { (k, j) };
        self.pairs.contains(&key)
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.pairs.iter()
    }
}

/// Block size whose pair count `b(b-1)/2` is nearest `(1 - tau) p(p-1)/2`; ties go to the smaller block.
pub fn block_size(p: usize, tau: f64) -> usize {
    let target = (1.0 - tau) * (p * (p - 1)) as f64 / 2.0;
    (1..=p)
        .min_by(|&a, &b| {
            let da = ((a * (a - 1)) as f64 / 2.0 - target).abs();
            let db = ((b * (b - 1)) as f64 / 2.0 - target).abs();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        })
        .unwrap_or(1)
}

/// Multiply off-diagonals by `factor` until the matrix factors; the zero pattern is unchanged.
fn shrink_to_pd(theta: &mut SymMatrix, factor: f64) -> Result<()> {
    for _ in 0..=MAX_SHRINKS {
        if cholesky_factor(theta).is_ok() {
            return Ok(());
        }
        let p = theta.p();
        for j in 0..p {
            for k in (j + 1)..p {
                let v = theta.get(j, k);
                theta.set(j, k, v * factor);
            }
        }
    }
    Err(TplError::Generation(format!(
        "covariance not positive definite after {MAX_SHRINKS} shrink steps"
    )))
}

/// Unit diagonal with one leading dense block whose entries are N(0.5, 0.05^2).
pub fn gen_block_diagonal<R: Rng + ?Sized>(spec: &CovSpec, rng: &mut R) -> Result<(SymMatrix, TruthSupport)> {
    if spec.structure != Structure::BlockDiagonal {
        return Err(TplError::arg("spec is not block diagonal"));
    }
    let p = spec.p;
    let b = block_size(p, spec.tau);
    let dist = Normal::new(0.5, 0.05).expect("valid normal");
    let mut theta = SymMatrix::identity(p)?;
    for j in 0..b {
        for k in (j + 1)..b {
            theta.set(j, k, dist.sample(rng));
        }
    }
    shrink_to_pd(&mut theta, BLOCK_SHRINK)?;
    let truth = TruthSupport::of_matrix(&theta);
    Ok((theta, truth))
}

/// Erdos-Renyi pattern with edge probability `1 - tau`; edge values uniform on
/// `+-[0.3, 0.6]`, then shrunk toward the identity until positive definite.
pub fn gen_sparse_random<R: Rng + ?Sized>(spec: &CovSpec, rng: &mut R) -> Result<(SymMatrix, TruthSupport)> {
    if spec.structure != Structure::SparseRandom {
        return Err(TplError::arg("spec is not sparse random"));
    }
    let p = spec.p;
    let mut theta = SymMatrix::identity(p)?;
    for j in 0..p {
        for k in (j + 1)..p {
            if rng.random::<f64>() < 1.0 - spec.tau {
                let magnitude = rng.random_range(0.3..=0.6);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                theta.set(j, k, sign * magnitude);
            }
        }
    }
    shrink_to_pd(&mut theta, RANDOM_SHRINK)?;
    let truth = TruthSupport::of_matrix(&theta);
    Ok((theta, truth))
}

pub fn generate<R: Rng + ?Sized>(spec: &CovSpec, rng: &mut R) -> Result<(SymMatrix, TruthSupport)> {
    match spec.structure {
        Structure::BlockDiagonal => gen_block_diagonal(spec, rng),
        Structure::SparseRandom => gen_sparse_random(spec, rng),
    }
}

/// `n` draws from `N_p(0, theta)` as `L z` with `theta = L L^T`.
pub fn sample_mvn<R: Rng + ?Sized>(theta: &SymMatrix, n: usize, rng: &mut R) -> Result<DataMatrix> {
    let chol = cholesky_factor(theta)?;
    let p = theta.p();
    let mut values = vec![0.0; n * p];
    let mut z = vec![0.0; p];
    for row in values.chunks_exact_mut(p) {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(rng);
        }
        chol.mul_lower(&z, row);
    }
    DataMatrix::new(n, p, values)
}

/// Sensitivity, specificity and accuracy of an estimated off-diagonal support.
///
/// Sensitivity is `None` when the truth has no pairs; specificity is `None`
/// when every pair is in the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportMetrics {
    pub sn: Option<f64>,
    pub sp: Option<f64>,
    pub ac: f64,
}

pub fn support_metrics(estimate: &TruthSupport, truth: &TruthSupport, p: usize) -> SupportMetrics {
    let total = p * (p - 1) / 2;
    let m0 = truth.m0();
    let tp = estimate.pairs().filter(|&&(j, k)| truth.contains(j, k)).count();
    let fp = estimate.m0() - tp;
    let tn = total - m0 - fp;
    SupportMetrics {
        sn: (m0 > 0).then(|| tp as f64 / m0 as f64),
        sp: (m0 < total).then(|| tn as f64 / (total - m0) as f64),
        ac: (tp + tn) as f64 / total as f64,
    }
}
