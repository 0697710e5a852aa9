use super::{IndexSet, SymMatrix, DEFAULT_PIVOT_TOL};
use crate::error::{Error, Result};

/// Lower-triangular factor `F` with `F·Fᵀ = M`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CholeskyFactor {
    n: usize,
    data: Vec<f64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Diagonal of the factor.
    pub fn pivots(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `Σ 2·log(F_ii)`; `−∞` when a pivot was clamped to zero.
    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| 2.0 * self.get(i, i).ln()).sum()
    }

    /// `F·Fᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| self.get(i, k) * self.get(j, k)).sum();
                out[i * n + j] = s;
                out[j * n + i] = s;
            }
        }
        SymMatrix { n, data: out }
    }

    /// Solve `F·y = b` in place.
    pub fn forward_solve(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.data[i * n..i * n + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(l, y)| l * y).sum();
            b[i] = (b[i] - s) / self.get(i, i);
        }
    }

    /// Solve `Fᵀ·x = y` in place.
    pub fn backward_solve(&self, y: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|k| self.get(k, i) * y[k]).sum();
            y[i] = (y[i] - s) / self.get(i, i);
        }
    }

    /// Solve `M·x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        self.forward_solve(b);
        self.backward_solve(b);
    }
}

/// Semi-definite Cholesky factorization.
///
/// Pivots in `[−tol·max_diag, tol·max_diag]` are treated as exact zeros and
/// their column is cleared. A pivot below `−tol·max_diag`, or a non-zero
/// residual in a cleared column, means the input is not PSD.
pub fn cholesky_psd(m: &SymMatrix, tol: f64) -> Result<CholeskyFactor> {
    factor(m, tol, false)
}

/// Strict factorization: any pivot at or below `tol·max_diag` is an error.
pub(crate) fn cholesky_strict(m: &SymMatrix, tol: f64) -> Result<CholeskyFactor> {
    factor(m, tol, true)
}

fn factor(m: &SymMatrix, tol: f64, strict: bool) -> Result<CholeskyFactor> {
    if m.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = m.dim();
    let scale = m.max_diag();
    let thresh = tol * scale;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let rowj = &l[j * n..j * n + j];
        let d = m.get(j, j) - rowj.iter().map(|x| x * x).sum::<f64>();
        if d < -thresh {
            return Err(Error::NotPositiveSemiDefinite { value: d });
        }
        if d <= thresh {
            if strict {
                return Err(Error::SingularToTolerance { index: j, pivot: d });
            }
            // Zero pivot: the rest of the column must vanish for a PSD input.
            let bound = tol.sqrt() * scale.max(f64::MIN_POSITIVE);
            for i in (j + 1)..n {
                let r = m.get(i, j) - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                if r.abs() > bound {
                    return Err(Error::NotPositiveSemiDefinite { value: d });
                }
            }
            continue;
        }
        let piv = d.sqrt();
        l[j * n + j] = piv;
        for i in (j + 1)..n {
            let r = m.get(i, j) - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            l[i * n + j] = r / piv;
        }
    }
    Ok(CholeskyFactor { n, data: l })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `log det(M)` with the default pivot tolerance. The empty matrix has
/// log-determinant 0.
pub fn log_det(m: &SymMatrix) -> Result<f64> {
    log_det_with_tol(m, DEFAULT_PIVOT_TOL)
}

pub fn log_det_with_tol(m: &SymMatrix, tol: f64) -> Result<f64> {
    Ok(cholesky_strict(m, tol)?.log_det())
}

/// Inverse of a symmetric positive definite matrix.
pub fn inverse_spd(m: &SymMatrix, tol: f64) -> Result<SymMatrix> {
    let f = cholesky_strict(m, tol)?;
    let n = m.dim();
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        col.iter_mut().for_each(|c| *c = 0.0);
        col[j] = 1.0;
        f.solve(&mut col);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    Ok(SymMatrix::symmetrized(n, inv))
}

/// `M_b − M_{a,b}ᵀ · M_a⁻¹ · M_{a,b}`; returns `M_b` when `a` is empty.
pub fn schur_complement(m: &SymMatrix, a: &IndexSet, b: &IndexSet) -> Result<SymMatrix> {
    if a.iter().any(|&i| b.contains(i)) {
        return Err(Error::invalid("schur complement index sets overlap"));
    }
    let mb = m.principal_submatrix(b)?;
    if a.is_empty() {
        return Ok(mb);
    }
    let ma = m.principal_submatrix(a)?;
    let cross = m.cross_block(a, b)?;
    reduce_by(&mb, &ma, &cross, DEFAULT_PIVOT_TOL)
}

/// `target − crossᵀ · pivot⁻¹ · cross`, where `cross` is `|pivot| × |target|`
/// row-major.
pub(crate) fn reduce_by(
    target: &SymMatrix,
    pivot: &SymMatrix,
    cross: &[f64],
    tol: f64,
) -> Result<SymMatrix> {
    let ka = pivot.dim();
    let kb = target.dim();
    debug_assert_eq!(cross.len(), ka * kb);
    if ka == 0 {
        return Ok(target.clone());
    }
    let f = cholesky_strict(pivot, tol)?;
    // Y = F⁻¹ · cross, column by column; stored column-major (kb × ka).
    let mut y = vec![0.0; kb * ka];
    let mut col = vec![0.0; ka];
    for c in 0..kb {
        for r in 0..ka {
            col[r] = cross[r * kb + c];
        }
        f.forward_solve(&mut col);
        y[c * ka..(c + 1) * ka].copy_from_slice(&col);
    }
    let mut out = target.as_slice().to_vec();
    for i in 0..kb {
        let yi = &y[i * ka..(i + 1) * ka];
        for j in i..kb {
            let v = dot(yi, &y[j * ka..(j + 1) * ka]);
            out[i * kb + j] -= v;
            if i != j {
                out[j * kb + i] -= v;
            }
        }
    }
    Ok(SymMatrix::symmetrized(kb, out))
}
