//! MAP inference for L-ensemble DPPs: greedy, block-wise and exhaustive.

mod blockwise;
mod exhaustive;
mod greedy;

pub use blockwise::{
    blockwise_reduced_kernels, bwdpp_map, bwdpp_map_conditional_form, BlockRecord, InferenceTrace,
};
pub use exhaustive::{exhaustive_map, EXHAUSTIVE_MAX_N};
pub use greedy::{greedy_map, greedy_sequence, GreedyOptions, GreedyUpdate};

use crate::error::{Error, Result};
use crate::kernel::DppKernel;
use crate::matrix::{cholesky_strict, inverse_spd, IndexSet, SymMatrix, DEFAULT_PIVOT_TOL};

/// A MAP routine applied to a single (sub-)kernel.
///
/// Implementations must return indices valid for the matrix they are given.
/// The empty kernel maps to the empty set.
pub trait SubSolver {
    fn solve(&self, l: &SymMatrix) -> Result<IndexSet>;
}

impl<F> SubSolver for F
where
    F: Fn(&SymMatrix) -> Result<IndexSet>,
{
    fn solve(&self, l: &SymMatrix) -> Result<IndexSet> {
        self(l)
    }
}

/// Greedy MAP as a sub-solver.
#[derive(Clone, Copy, Debug, Default)]
pub struct Greedy(pub GreedyOptions);

impl SubSolver for Greedy {
    fn solve(&self, l: &SymMatrix) -> Result<IndexSet> {
        greedy::greedy_matrix(l, &self.0)
    }
}

/// Exhaustive search as a sub-solver; only usable on kernels of at most
/// [`EXHAUSTIVE_MAX_N`] items.
#[derive(Clone, Copy, Debug, Default)]
pub struct Exhaustive;

impl SubSolver for Exhaustive {
    fn solve(&self, l: &SymMatrix) -> Result<IndexSet> {
        exhaustive::exhaustive_matrix(l)
    }
}

/// `log det(L_C)`, with `log det(L_∅) = 0` and `−∞` for a singular `L_C`.
pub fn log_prob_unnormalized(kernel: &DppKernel, c: &IndexSet) -> Result<f64> {
    log_det_or_neg_inf(&kernel.matrix().principal_submatrix(c)?)
}

pub(crate) fn log_det_or_neg_inf(m: &SymMatrix) -> Result<f64> {
    match cholesky_strict(m, DEFAULT_PIVOT_TOL) {
        Ok(f) => Ok(f.log_det()),
        Err(Error::SingularToTolerance { .. }) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// Kernel of the DPP conditioned on `a_in ⊆ Y` and `a_out ∩ Y = ∅`, over the
/// remaining items in increasing index order.
///
/// Computed literally as `([(L_{Ā_out} + I_{Ā_in})⁻¹]_{Ā_in})⁻¹ − I`, where
/// `I_B` is the identity on positions `B` and zero elsewhere.
pub fn conditional_kernel(kernel: &DppKernel, a_in: &IndexSet, a_out: &IndexSet) -> Result<SymMatrix> {
    conditional_matrix(kernel.matrix(), a_in, a_out)
}

pub(crate) fn conditional_matrix(l: &SymMatrix, a_in: &IndexSet, a_out: &IndexSet) -> Result<SymMatrix> {
    let n = l.dim();
    a_in.check_bound(n)?;
    a_out.check_bound(n)?;
    if a_in.iter().any(|&i| a_out.contains(i)) {
        return Err(Error::invalid("conditioning sets overlap"));
    }
    let kept = a_out.complement(n);
    let base = l.principal_submatrix(&kept)?;
    if a_in.is_empty() {
        return Ok(base);
    }
    let in_pos = a_in.positions_in(&kept)?;
    let free_pos = in_pos.complement(kept.len());
    let k = kept.len();
    let mut shifted = base.as_slice().to_vec();
    for &p in free_pos.iter() {
        shifted[p * k + p] += 1.0;
    }
    let inv = inverse_spd(&SymMatrix::symmetrized(k, shifted), DEFAULT_PIVOT_TOL)?;
    let restricted = inv.principal_submatrix(&free_pos)?;
    Ok(inverse_spd(&restricted, DEFAULT_PIVOT_TOL)?.shifted(-1.0))
}
