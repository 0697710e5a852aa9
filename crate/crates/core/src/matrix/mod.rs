//! Dense symmetric matrices and the linear algebra the DPP engines need.
//!
//! Storage is row-major. Every routine here is a pure function of its
//! inputs; nothing is cached on the matrix.

mod cholesky;
mod eigen;

pub use cholesky::{cholesky_psd, inverse_spd, log_det, log_det_with_tol, schur_complement, CholeskyFactor};
pub use eigen::{min_eigenvalue, psd_repair, tridiagonalize};
pub(crate) use cholesky::{cholesky_strict, reduce_by};

use std::fmt;

use crate::error::{Error, Result};

/// Relative pivot tolerance used by determinants and inverses unless a
/// caller asks for something else. Scaled by the largest diagonal entry.
pub const DEFAULT_PIVOT_TOL: f64 = 1e-10;

/// Symmetry tolerance enforced by [`SymMatrix::new`].
const SYMMETRY_TOL: f64 = 1e-12;

/// A dense, real, symmetric matrix.
///
/// A `0×0` matrix is allowed; it is what a principal sub-matrix over the
/// empty index set looks like, and its determinant is 1.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{})", self.n, self.n)?;
        for i in 0..self.n {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

impl SymMatrix {
    /// Build from row-major data, validating finiteness and symmetry.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let a = data[i * n + j];
                let b = data[j * n + i];
                if (a - b).abs() > SYMMETRY_TOL * a.abs().max(1.0) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { n, data })
    }

    /// Build from a list of rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(n, data)
    }

    /// Build from row-major data that is symmetric up to rounding, forcing
    /// exact symmetry by averaging mirrored entries.
    pub(crate) fn symmetrized(n: usize, mut data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (data[i * n + j] + data[j * n + i]);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Largest diagonal entry, or 0 for the empty matrix.
    pub fn max_diag(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).fold(0.0, f64::max)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Add `shift` to every diagonal entry.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += shift;
        }
        out
    }

    /// `self − other`, entrywise.
    pub fn sub(&self, other: &SymMatrix) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self { n: self.n, data })
    }

    /// Max-norm distance to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Dense product `self · other` (the result is not symmetric in general).
    pub fn matmul(&self, other: &SymMatrix) -> Vec<f64> {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `M_idx`: rows and columns restricted to `idx`.
    pub fn principal_submatrix(&self, idx: &IndexSet) -> Result<Self> {
        idx.check_bound(self.n)?;
        let k = idx.len();
        let mut data = Vec::with_capacity(k * k);
        for &i in idx.iter() {
            let row = self.row(i);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        Ok(Self { n: k, data })
    }

    /// `M_{rows,cols}` as a row-major `|rows| × |cols|` block.
    pub fn cross_block(&self, rows: &IndexSet, cols: &IndexSet) -> Result<Vec<f64>> {
        rows.check_bound(self.n)?;
        cols.check_bound(self.n)?;
        let mut out = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows.iter() {
            let row = self.row(i);
            out.extend(cols.iter().map(|&j| row[j]));
        }
        Ok(out)
    }
}

/// A strictly increasing list of 0-based indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    /// Validate that `indices` is strictly increasing.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::UnsortedIndices);
        }
        Ok(Self(indices))
    }

    /// Sort and deduplicate arbitrary indices.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self(indices)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// `{start, …, end − 1}`.
    pub fn range(start: usize, end: usize) -> Self {
        Self((start..end).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Self::from_unsorted(v)
    }

    /// Elements of `self` not in `other`.
    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        Self(self.0.iter().copied().filter(|&i| !other.contains(i)).collect())
    }

    /// `{0, …, n − 1} \ self`.
    pub fn complement(&self, n: usize) -> IndexSet {
        Self((0..n).filter(|&i| !self.contains(i)).collect())
    }

    /// Add a constant to every index.
    pub fn offset(&self, by: usize) -> IndexSet {
        Self(self.0.iter().map(|&i| i + by).collect())
    }

    /// Position of each element of `self` inside `within` (both sorted).
    /// Fails if some element of `self` is missing from `within`.
    pub fn positions_in(&self, within: &IndexSet) -> Result<IndexSet> {
        let mut out = Vec::with_capacity(self.len());
        for &i in self.iter() {
            match within.0.binary_search(&i) {
                Ok(p) => out.push(p),
                Err(_) => {
                    return Err(Error::invalid(format!("index {i} not in containing set")))
                }
            }
        }
        Ok(Self(out))
    }

    pub(crate) fn check_bound(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last >= n => Err(Error::IndexOutOfRange { index: last, dim: n }),
            _ => Ok(()),
        }
    }
}

impl From<IndexSet> for Vec<usize> {
    fn from(s: IndexSet) -> Self {
        s.0
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = &'a usize;
    type IntoIter = std::slice::Iter<'a, usize>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn submatrix_of_identity_is_identity() {
        let m = SymMatrix::identity(3);
        let s = m.principal_submatrix(&IndexSet::new(vec![0, 2]).unwrap()).unwrap();
        assert_eq!(s, SymMatrix::identity(2));
    }

    #[test]
    fn full_index_set_returns_same_matrix() {
        let m = SymMatrix::from_rows(&[[2.0, 0.5, 0.1], [0.5, 3.0, 0.2], [0.1, 0.2, 1.0]]).unwrap();
        assert_eq!(m.principal_submatrix(&IndexSet::range(0, 3)).unwrap(), m);
    }

    #[test]
    fn empty_submatrix_has_unit_determinant() {
        let m = SymMatrix::identity(4);
        let s = m.principal_submatrix(&IndexSet::empty()).unwrap();
        assert_eq!(s.dim(), 0);
        assert_eq!(log_det(&s).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let m = SymMatrix::identity(2);
        let err = m.principal_submatrix(&IndexSet::new(vec![0, 2]).unwrap()).unwrap_err();
        assert_eq!(err, Error::IndexOutOfRange { index: 2, dim: 2 });
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        assert!(matches!(
            SymMatrix::from_rows(&[[1.0, 2.0], [2.1, 1.0]]),
            Err(Error::NotSymmetric { .. })
        ));
        assert_eq!(
            SymMatrix::from_rows(&[[1.0, f64::NAN], [f64::NAN, 1.0]]),
            Err(Error::NonFinite)
        );
    }

    #[test]
    fn index_set_rejects_unsorted() {
        assert_eq!(IndexSet::new(vec![1, 1]), Err(Error::UnsortedIndices));
        assert_eq!(IndexSet::new(vec![2, 1]), Err(Error::UnsortedIndices));
        let s = IndexSet::from_unsorted(vec![3, 1, 3, 0]);
        assert_eq!(s.as_slice(), &[0, 1, 3]);
        assert_eq!(s.complement(5).as_slice(), &[2, 4]);
        assert_eq!(
            IndexSet::new(vec![1, 3]).unwrap().positions_in(&s).unwrap().as_slice(),
            &[1, 2]
        );
    }
}
