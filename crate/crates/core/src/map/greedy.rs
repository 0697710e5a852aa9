use serde::{Deserialize, Serialize};

use super::conditional_matrix;
use crate::error::{Error, Result};
use crate::kernel::{DppKernel, KERNEL_PSD_TOL};
use crate::matrix::{IndexSet, SymMatrix};

/// Diagonal entries at or below this are never picked.
const UNSELECTABLE: f64 = 1e-12;

/// A conditional gain must exceed 1 by this much. Exact-threshold gains
/// (e.g. an identity kernel) otherwise flip on rounding noise.
const GAIN_FLOOR: f64 = 1.0 + 1e-10;

/// How the conditional kernel is refreshed after each accepted item.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyUpdate {
    /// Incremental Cholesky rows: only the conditional diagonal is tracked,
    /// `O(N·k)` work per accepted item.
    #[default]
    RankOne,
    /// Rebuild the full conditional kernel from the original one with two
    /// matrix inverses per accepted item.
    ConditionalKernel,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GreedyOptions {
    /// Only items with `L_ii > 1` may be picked first. Without this the first
    /// pick is the largest diagonal entry even when it lowers the
    /// probability below that of the empty set.
    pub require_initial_gain: bool,
    pub update: GreedyUpdate,
}

/// Greedy MAP: repeatedly add the item with the largest conditional diagonal
/// while that diagonal exceeds 1. Ties go to the lowest index.
pub fn greedy_map(kernel: &DppKernel, opts: &GreedyOptions) -> Result<IndexSet> {
    greedy_matrix(kernel.matrix(), opts)
}

/// Items in the order greedy accepted them.
pub fn greedy_sequence(kernel: &DppKernel, opts: &GreedyOptions) -> Result<Vec<usize>> {
    match opts.update {
        GreedyUpdate::RankOne => rank_one(kernel.matrix(), opts.require_initial_gain),
        GreedyUpdate::ConditionalKernel => by_conditional_kernel(kernel.matrix(), opts.require_initial_gain),
    }
}

pub(crate) fn greedy_matrix(l: &SymMatrix, opts: &GreedyOptions) -> Result<IndexSet> {
    let seq = match opts.update {
        GreedyUpdate::RankOne => rank_one(l, opts.require_initial_gain)?,
        GreedyUpdate::ConditionalKernel => by_conditional_kernel(l, opts.require_initial_gain)?,
    };
    Ok(IndexSet::from_unsorted(seq))
}

/// Lowest index among the maxima of `value` over `items`, if above `floor`.
fn argmax(items: impl Iterator<Item = usize>, value: impl Fn(usize) -> f64, floor: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in items {
        let v = value(i);
        if v > floor && best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

fn first_floor(require_initial_gain: bool) -> f64 {
    if require_initial_gain {
        GAIN_FLOOR
    } else {
        UNSELECTABLE
    }
}

fn check_psd(v: f64, max_diag: f64) -> Result<()> {
    if v < -KERNEL_PSD_TOL * max_diag.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositiveSemiDefinite { value: v });
    }
    Ok(())
}

fn rank_one(l: &SymMatrix, require_initial_gain: bool) -> Result<Vec<usize>> {
    let n = l.dim();
    let mut d = l.diag();
    let max_diag = l.max_diag();
    for &v in &d {
        check_psd(v, max_diag)?;
    }
    let Some(first) = argmax(0..n, |i| d[i], first_floor(require_initial_gain)) else {
        return Ok(Vec::new());
    };
    let mut picked = vec![first];
    // cols[t][i]: entry i of the t-th Cholesky column of the selected block,
    // extended over the active candidates.
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut active: Vec<usize> = (0..n).filter(|&i| i != first).collect();
    let mut j = first;
    loop {
        let pivot = d[j].sqrt();
        let mut col = vec![0.0; n];
        let row = l.row(j);
        for &i in &active {
            let mut e = row[i];
            for c in &cols {
                e -= c[j] * c[i];
            }
            e /= pivot;
            col[i] = e;
            d[i] -= e * e;
            check_psd(d[i], max_diag)?;
        }
        cols.push(col);
        // Conditional diagonals only shrink, so a dropped item never returns.
        active.retain(|&i| d[i] > GAIN_FLOOR);
        let Some(next) = argmax(active.iter().copied(), |i| d[i], GAIN_FLOOR) else {
            break;
        };
        active.retain(|&i| i != next);
        picked.push(next);
        j = next;
    }
    Ok(picked)
}

fn by_conditional_kernel(l: &SymMatrix, require_initial_gain: bool) -> Result<Vec<usize>> {
    let n = l.dim();
    let max_diag = l.max_diag();
    for v in l.diag() {
        check_psd(v, max_diag)?;
    }
    let Some(first) = argmax(0..n, |i| l.get(i, i), first_floor(require_initial_gain)) else {
        return Ok(Vec::new());
    };
    let mut picked = vec![first];
    loop {
        let chosen = IndexSet::from_unsorted(picked.clone());
        let rest = chosen.complement(n);
        if rest.is_empty() {
            break;
        }
        let cond = conditional_matrix(l, &chosen, &IndexSet::empty())?;
        for p in 0..rest.len() {
            check_psd(cond.get(p, p), max_diag)?;
        }
        let Some(p) = argmax(0..rest.len(), |p| cond.get(p, p), GAIN_FLOOR) else {
            break;
        };
        picked.push(rest.as_slice()[p]);
    }
    Ok(picked)
}
