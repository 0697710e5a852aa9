use std::time::{Duration, Instant};

use super::{conditional_matrix, SubSolver};
use crate::error::{Error, Result};
use crate::kernel::{validate_partition, BlockPartition, DppKernel, DEFAULT_EPS_ZERO};
use crate::matrix::{psd_repair, reduce_by, IndexSet, SymMatrix, DEFAULT_PIVOT_TOL};

/// What happened in one block of a block-wise run.
#[derive(Clone, Debug)]
pub struct BlockRecord {
    /// Half-open global index range of the block.
    pub range: (usize, usize),
    /// Block kernel after conditioning on the previous block's selection,
    /// before any PSD clamp.
    pub reduced_kernel: SymMatrix,
    /// Diagonal shift the PSD clamp applied before the sub-solver ran.
    pub clamp_shift: f64,
    /// Selected items, as global indices.
    pub selected: IndexSet,
    /// Reduced kernel of the selected items, computed from the previous
    /// block's reduced selection.
    pub reduced_selected: SymMatrix,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct InferenceTrace {
    pub blocks: Vec<BlockRecord>,
}

impl InferenceTrace {
    pub fn selected(&self) -> IndexSet {
        self.blocks
            .iter()
            .fold(IndexSet::empty(), |acc, b| acc.union(&b.selected))
    }
}

fn check_partition(kernel: &DppKernel, partition: &BlockPartition) -> Result<()> {
    if !validate_partition(kernel, partition, DEFAULT_EPS_ZERO)? {
        return Err(Error::InvalidPartition(format!(
            "kernel has coupling outside the γ = {} corners of blocks {:?}",
            partition.gamma, partition.block_sizes
        )));
    }
    Ok(())
}

fn run_sub_solver<S: SubSolver + ?Sized>(f: &S, m: &SymMatrix) -> Result<IndexSet> {
    let local = f.solve(m)?;
    if let Some(&bad) = local.iter().find(|&&i| i >= m.dim()) {
        return Err(Error::SubSolverOutOfRange { index: bad, dim: m.dim() });
    }
    Ok(local)
}

/// Clamp a conditioned block before handing it to a sub-solver.
fn clamp(m: &SymMatrix) -> Result<(SymMatrix, f64)> {
    let repaired = psd_repair(m, 0.0)?;
    let shift = if m.dim() > 0 { repaired.get(0, 0) - m.get(0, 0) } else { 0.0 };
    Ok((repaired, shift))
}

/// Block-wise MAP over an almost-block-diagonal kernel.
///
/// Block `i` is conditioned on the items selected in block `i − 1` only; the
/// partition guarantees no coupling reaches further back. Conditioned blocks
/// are clamped to PSD before the sub-solver sees them.
pub fn bwdpp_map<S: SubSolver + ?Sized>(
    kernel: &DppKernel,
    partition: &BlockPartition,
    f: &S,
) -> Result<(IndexSet, InferenceTrace)> {
    check_partition(kernel, partition)?;
    let l = kernel.matrix();
    let mut trace = InferenceTrace::default();
    let mut prev_sel = IndexSet::empty();
    let mut prev_reduced = SymMatrix::zeros(0);
    for (start, end) in partition.ranges() {
        let t0 = Instant::now();
        let block = IndexSet::range(start, end);
        let lb = l.principal_submatrix(&block)?;
        let (reduced, input, shift) = if prev_sel.is_empty() {
            (lb.clone(), lb, 0.0)
        } else {
            let cross = l.cross_block(&prev_sel, &block)?;
            let reduced = reduce_by(&lb, &prev_reduced, &cross, DEFAULT_PIVOT_TOL)?;
            let (input, shift) = clamp(&reduced)?;
            (reduced, input, shift)
        };
        let local = run_sub_solver(f, &input)?;
        let selected = local.offset(start);
        let ls = l.principal_submatrix(&selected)?;
        let reduced_selected = if prev_sel.is_empty() || selected.is_empty() {
            ls
        } else {
            let cross = l.cross_block(&prev_sel, &selected)?;
            reduce_by(&ls, &prev_reduced, &cross, DEFAULT_PIVOT_TOL)?
        };
        prev_sel = selected.clone();
        prev_reduced = reduced_selected.clone();
        trace.blocks.push(BlockRecord {
            range: (start, end),
            reduced_kernel: reduced,
            clamp_shift: shift,
            selected,
            reduced_selected,
            elapsed: t0.elapsed(),
        });
    }
    Ok((trace.selected(), trace))
}

/// The same inference phrased as a sequence of conditional-kernel updates:
/// block `i` is solved on the kernel of blocks `1..=i` conditioned on every
/// earlier selection being in and every earlier non-selection being out.
///
/// Much slower than [`bwdpp_map`]; it exists to cross-check it.
pub fn bwdpp_map_conditional_form<S: SubSolver + ?Sized>(
    kernel: &DppKernel,
    partition: &BlockPartition,
    f: &S,
) -> Result<IndexSet> {
    check_partition(kernel, partition)?;
    let l = kernel.matrix();
    let mut chosen = IndexSet::empty();
    for (start, end) in partition.ranges() {
        let prefix = l.principal_submatrix(&IndexSet::range(0, end))?;
        let excluded = chosen.complement(start);
        let cond = conditional_matrix(&prefix, &chosen, &excluded)?;
        let input = if chosen.is_empty() { cond } else { clamp(&cond)?.0 };
        let local = run_sub_solver(f, &input)?;
        chosen = chosen.union(&local.offset(start));
    }
    Ok(chosen)
}

/// Reduced kernels `L̃_{C_i}` of a fixed set `C` split by the partition, each
/// block conditioned on the previous block's share of `C`. Their
/// log-determinants sum to `log det(L_C)`.
pub fn blockwise_reduced_kernels(
    kernel: &DppKernel,
    partition: &BlockPartition,
    c: &IndexSet,
) -> Result<Vec<SymMatrix>> {
    check_partition(kernel, partition)?;
    let l = kernel.matrix();
    c.check_bound(l.dim())?;
    let mut out: Vec<SymMatrix> = Vec::with_capacity(partition.num_blocks());
    let mut prev = IndexSet::empty();
    for (start, end) in partition.ranges() {
        let cur = IndexSet::new(c.iter().copied().filter(|&i| start <= i && i < end).collect())?;
        let lc = l.principal_submatrix(&cur)?;
        let reduced = match out.last() {
            Some(prev_reduced) if !prev.is_empty() && !cur.is_empty() => {
                reduce_by(&lc, prev_reduced, &l.cross_block(&prev, &cur)?, DEFAULT_PIVOT_TOL)?
            }
            _ => lc,
        };
        out.push(reduced);
        prev = cur;
    }
    Ok(out)
}
