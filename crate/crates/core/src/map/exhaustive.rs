use crate::error::{Error, Result};
use crate::kernel::DppKernel;
use crate::matrix::{IndexSet, SymMatrix, DEFAULT_PIVOT_TOL};

/// Largest kernel [`exhaustive_map`] accepts.
pub const EXHAUSTIVE_MAX_N: usize = 20;

/// Exact MAP by enumerating every subset.
///
/// Determinants that agree to about 1e-12 (relative, in log space) count as
/// ties; ties prefer the smaller set, then the lexicographically smaller
/// index list. Branches whose determinant is already zero are pruned, since
/// every superset of a singular set is singular too.
pub fn exhaustive_map(kernel: &DppKernel) -> Result<IndexSet> {
    exhaustive_matrix(kernel.matrix())
}

struct Search<'a> {
    l: &'a SymMatrix,
    n: usize,
    thresh: f64,
    // Rows of the Cholesky factor of the current prefix set, padded to n.
    factor: Vec<f64>,
    current: Vec<usize>,
    log_det: f64,
    best: Vec<usize>,
    best_log_det: f64,
}

impl Search<'_> {
    fn better(&self) -> bool {
        let (a, b) = (self.log_det, self.best_log_det);
        let tol = 1e-12 * (1.0 + a.abs().max(b.abs()));
        if a > b + tol {
            return true;
        }
        if a < b - tol {
            return false;
        }
        (self.current.len(), &self.current) < (self.best.len(), &self.best)
    }

    fn visit(&mut self, from: usize) {
        let k = self.current.len();
        for j in from..self.n {
            // Extend the factor by item j.
            let row_j = self.l.row(j);
            let mut d = row_j[j];
            for r in 0..k {
                let mut e = row_j[self.current[r]];
                for c in 0..r {
                    e -= self.factor[r * self.n + c] * self.factor[k * self.n + c];
                }
                e /= self.factor[r * self.n + r];
                self.factor[k * self.n + r] = e;
                d -= e * e;
            }
            if d <= self.thresh {
                continue;
            }
            self.factor[k * self.n + k] = d.sqrt();
            let saved = self.log_det;
            self.current.push(j);
            self.log_det += d.ln();
            if self.better() {
                self.best = self.current.clone();
                self.best_log_det = self.log_det;
            }
            self.visit(j + 1);
            self.current.pop();
            self.log_det = saved;
        }
    }
}

pub(crate) fn exhaustive_matrix(l: &SymMatrix) -> Result<IndexSet> {
    let n = l.dim();
    if n > EXHAUSTIVE_MAX_N {
        return Err(Error::TooLarge { n, max: EXHAUSTIVE_MAX_N });
    }
    if l.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut s = Search {
        l,
        n,
        thresh: DEFAULT_PIVOT_TOL * l.max_diag(),
        factor: vec![0.0; n * n],
        current: Vec::with_capacity(n),
        log_det: 0.0,
        best: Vec::new(),
        best_log_det: 0.0,
    };
    s.visit(0);
    Ok(IndexSet::from_unsorted(s.best))
}
