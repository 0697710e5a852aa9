use serde::{Deserialize, Serialize};

use super::DppKernel;
use crate::error::{Error, Result};
use crate::matrix::{IndexSet, SymMatrix};

/// Magnitude at or below which a kernel entry counts as zero.
pub const DEFAULT_EPS_ZERO: f64 = 1e-12;

/// Consecutive diagonal blocks of an almost-block-diagonal kernel.
///
/// Off-diagonal coupling is allowed only between adjacent blocks, and only
/// inside the `gamma × gamma` corner formed by the last rows of the upper
/// block and the first columns of the lower one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub block_sizes: Vec<usize>,
    pub gamma: usize,
}

impl BlockPartition {
    pub fn new(block_sizes: Vec<usize>, gamma: usize) -> Result<Self> {
        if block_sizes.is_empty() {
            return Err(Error::InvalidPartition("no blocks".into()));
        }
        if block_sizes.contains(&0) {
            return Err(Error::InvalidPartition("empty block".into()));
        }
        Ok(Self { block_sizes, gamma })
    }

    /// A single block covering all `n` items.
    pub fn trivial(n: usize) -> Self {
        Self {
            block_sizes: vec![n],
            gamma: 0,
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn total(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// Half-open `[start, end)` ranges of the blocks.
    pub fn ranges(&self) -> Vec<(usize, usize)> {
        let mut start = 0;
        self.block_sizes
            .iter()
            .map(|&l| {
                let r = (start, start + l);
                start += l;
                r
            })
            .collect()
    }

    pub fn block_index_sets(&self) -> Vec<IndexSet> {
        self.ranges().into_iter().map(|(a, b)| IndexSet::range(a, b)).collect()
    }

    /// First index of every block after the first.
    pub fn cuts(&self) -> Vec<usize> {
        self.ranges().iter().skip(1).map(|r| r.0).collect()
    }

    pub(crate) fn from_cuts(n: usize, cuts: &[usize], gamma: usize) -> Self {
        let mut sizes = Vec::with_capacity(cuts.len() + 1);
        let mut prev = 0;
        for &c in cuts.iter().chain(std::iter::once(&n)) {
            sizes.push(c - prev);
            prev = c;
        }
        Self {
            block_sizes: sizes,
            gamma,
        }
    }
}

/// For each row, the largest column `c′ > r` holding a non-zero, or `r`.
fn row_reach(l: &SymMatrix, eps_zero: f64) -> Vec<usize> {
    let n = l.dim();
    (0..n)
        .map(|r| {
            let row = l.row(r);
            (r + 1..n).rev().find(|&c| row[c].abs() > eps_zero).unwrap_or(r)
        })
        .collect()
}

/// Finest partition whose cross-block non-zeros fit in `gamma × gamma`
/// bottom-left corners of adjacent blocks.
///
/// A cut before index `c` is admissible when every non-zero `L[r][c′]` with
/// `r < c ≤ c′` lies in rows `[c − γ, c)` and columns `[c, c + γ)`. Two cuts
/// `p < c` may coexist only if no non-zero spans both (that would couple
/// non-adjacent blocks). Scanning admissible cuts left to right and keeping
/// each one beyond the reach of the previous kept cut maximizes the count,
/// because the reach of a cut is monotone in its position.
pub fn gamma_partition(kernel: &DppKernel, gamma: usize, eps_zero: f64) -> BlockPartition {
    let l = kernel.matrix();
    let n = l.dim();
    if n <= 1 {
        return BlockPartition {
            block_sizes: vec![n],
            gamma,
        };
    }
    let reach = row_reach(l, eps_zero);
    // prefix[k] = max reach over rows < k, or None if no rows.
    let mut prefix: Vec<Option<usize>> = Vec::with_capacity(n + 1);
    prefix.push(None);
    for r in 0..n {
        let prev = prefix[r];
        prefix.push(Some(prev.map_or(reach[r], |p| p.max(reach[r]))));
    }

    let admissible = |c: usize| -> bool {
        let far = c.saturating_sub(gamma);
        if prefix[far].is_some_and(|m| m >= c) {
            return false;
        }
        (far..c).all(|r| reach[r] < c + gamma)
    };

    let mut cuts: Vec<usize> = Vec::new();
    for c in 1..n {
        if !admissible(c) {
            continue;
        }
        let clear = match cuts.last().copied() {
            None => true,
            Some(p) => prefix[p].is_none_or(|m: usize| m < c),
        };
        if clear {
            cuts.push(c);
        }
    }
    BlockPartition::from_cuts(n, &cuts, gamma)
}

/// Check that `partition` describes `kernel`: non-adjacent blocks are zero and
/// adjacent coupling stays inside the `gamma × gamma` bottom-left corner.
pub fn validate_partition(kernel: &DppKernel, partition: &BlockPartition, eps_zero: f64) -> Result<bool> {
    let l = kernel.matrix();
    let n = l.dim();
    if partition.total() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: partition.total(),
        });
    }
    let ranges = partition.ranges();
    let mut block_of = vec![0usize; n];
    for (b, &(s, e)) in ranges.iter().enumerate() {
        block_of[s..e].iter_mut().for_each(|x| *x = b);
    }
    let g = partition.gamma;
    for r in 0..n {
        let row = l.row(r);
        for c in (r + 1)..n {
            if row[c].abs() <= eps_zero {
                continue;
            }
            let (br, bc) = (block_of[r], block_of[c]);
            if br == bc {
                continue;
            }
            if bc > br + 1 {
                return Ok(false);
            }
            let start = ranges[bc].0;
            if r + g < start || c >= start + g {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
