//! Half-vectorization of symmetric matrices.
//!
//! The upper triangle (diagonal included) of a `p x p` matrix is stacked row
//! by row: `(1,1), (1,2), ..., (1,p), (2,2), ..., (p,p)`. The public
//! `pair_to_index` / `index_to_pair` pair works with 1-based indices so the
//! position formula can be checked against hand calculations; everything else
//! in the crate uses the 0-based [`VechIndex::offset`].

use crate::error::{Result, TplError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VechIndex {
    p: usize,
    m: usize,
}

impl VechIndex {
    pub fn new(p: usize) -> Result<Self> {
        if p < 1 {
            return Err(TplError::arg("dimension p must be at least 1"));
        }
        Ok(Self {
            p,
            m: p * (p + 1) / 2,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of free parameters, `p(p+1)/2`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of off-diagonal pairs, `p(p-1)/2`.
    pub fn n_pairs(&self) -> usize {
        self.m - self.p
    }

    /// 1-based position of `(j, k)`, `j <= k`: `(2p + 2 - j)(j - 1)/2 + (k + 1 - j)`.
    pub fn pair_to_index(&self, j: usize, k: usize) -> Result<usize> {
        if j < 1 || j > k || k > self.p {
            return Err(TplError::arg(format!(
                "pair ({j},{k}) outside 1 <= j <= k <= {}",
                self.p
            )));
        }
        Ok((2 * self.p + 2 - j) * (j - 1) / 2 + (k + 1 - j))
    }

    /// Inverse of [`pair_to_index`](Self::pair_to_index).
    pub fn index_to_pair(&self, idx: usize) -> Result<(usize, usize)> {
        if idx < 1 || idx > self.m {
            return Err(TplError::arg(format!(
                "index {idx} outside 1..={}",
                self.m
            )));
        }
        let (j, k) = self.pair_of(idx - 1);
        Ok((j + 1, k + 1))
    }

    /// 0-based storage offset of the 0-based pair `(j, k)`; order of arguments is irrelevant.
    #[inline]
    pub fn offset(&self, j: usize, k: usize) -> usize {
        let (j, k) = if j <= k { (j, k) } else { (k, j) };
        debug_assert!(k < self.p);
        // (2p + 1 - j) j / 2 rows precede row j
        (2 * self.p + 1 - j) * j / 2 + (k - j)
    }

    /// 0-based pair `(j, k)`, `j <= k`, stored at 0-based `offset`.
    pub fn pair_of(&self, offset: usize) -> (usize, usize) {
        debug_assert!(offset < self.m);
        let mut j = 0;
        let mut row_start = 0;
        loop {
            let row_len = self.p - j;
            if offset < row_start + row_len {
                return (j, j + offset - row_start);
            }
            row_start += row_len;
            j += 1;
        }
    }

    /// Iterate `(offset, j, k)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let p = self.p;
        (0..p)
            .flat_map(move |j| (j..p).map(move |k| (j, k)))
            .enumerate()
            .map(|(o, (j, k))| (o, j, k))
    }

    /// Whether the 0-based offset is a diagonal position.
    pub fn is_diagonal(&self, offset: usize) -> bool {
        let (j, k) = self.pair_of(offset);
        j == k
    }
}
