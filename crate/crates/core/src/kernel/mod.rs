//! DPP kernels: the quality-diversity construction, almost-block-diagonal
//! partitions, and the synthetic benchmark generator.

mod partition;
mod synthetic;

pub use partition::{gamma_partition, validate_partition, BlockPartition, DEFAULT_EPS_ZERO};
pub use synthetic::{generate_synthetic_kernel, SyntheticKernelSpec};

use crate::error::{Error, Result};
use crate::matrix::{min_eigenvalue, SymMatrix};

/// PSD slack allowed on a kernel, relative to its largest diagonal entry.
pub const KERNEL_PSD_TOL: f64 = 1e-8;

/// Per-item quality magnitudes, all strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct QualityVector(Vec<f64>);

impl QualityVector {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if let Some(bad) = q.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::invalid(format!("quality values must be positive and finite, got {bad}")));
        }
        Ok(Self(q))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Unit-diagonal PSD similarity matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix(SymMatrix);

impl SimilarityMatrix {
    /// Validates unit diagonal, `|S_ij| ≤ 1` and PSD to `1e-8`.
    pub fn new(s: SymMatrix) -> Result<Self> {
        for i in 0..s.dim() {
            if (s.get(i, i) - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("similarity diagonal S[{i}][{i}] = {}", s.get(i, i))));
            }
        }
        if s.max_abs() > 1.0 + 1e-12 {
            return Err(Error::invalid("similarity entries must lie in [-1, 1]"));
        }
        if s.dim() > 0 {
            let lmin = min_eigenvalue(&s, 1e-12)?;
            if lmin < -1e-8 {
                return Err(Error::NotPositiveSemiDefinite { value: lmin });
            }
        }
        Ok(Self(s))
    }

    /// For constructions that are unit-diagonal and PSD by design.
    pub(crate) fn new_unchecked(s: SymMatrix) -> Self {
        Self(s)
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// An L-ensemble kernel, optionally remembering its quality-diversity factors.
#[derive(Clone, Debug, PartialEq)]
pub struct DppKernel {
    l: SymMatrix,
    provenance: Option<(QualityVector, SimilarityMatrix)>,
}

impl DppKernel {
    /// Wrap a matrix after checking `λ_min ≥ −1e-8·max_diag`.
    pub fn new(l: SymMatrix) -> Result<Self> {
        if l.dim() > 0 {
            let lmin = min_eigenvalue(&l, 1e-13)?;
            if lmin < -KERNEL_PSD_TOL * l.max_diag().max(f64::MIN_POSITIVE) {
                return Err(Error::NotPositiveSemiDefinite { value: lmin });
            }
        }
        Ok(Self { l, provenance: None })
    }

    /// For matrices that are PSD by construction (repaired, or a congruence of
    /// a PSD similarity).
    pub(crate) fn new_unchecked(l: SymMatrix) -> Self {
        Self { l, provenance: None }
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.dim()
    }

    pub fn provenance(&self) -> Option<(&QualityVector, &SimilarityMatrix)> {
        self.provenance.as_ref().map(|(q, s)| (q, s))
    }
}

/// `L_ij = q_i · S_ij · q_j`.
pub fn build_quality_diversity_kernel(q: &QualityVector, s: &SimilarityMatrix) -> Result<DppKernel> {
    let n = q.len();
    if s.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: s.dim() });
    }
    let qs = q.as_slice();
    let sm = s.matrix();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = qs[i] * sm.get(i, j) * qs[j];
        }
    }
    Ok(DppKernel {
        l: SymMatrix::symmetrized(n, data),
        provenance: Some((q.clone(), s.clone())),
    })
}

/// `S_ij = exp(−(t_i − t_j)² / σ²)`, with values below `eps_zero` set to 0.
///
/// The truncation is what makes kernels over a time line almost block
/// diagonal. It perturbs the spectrum by at most `n·eps_zero`.
pub fn gaussian_position_similarity(times: &[f64], sigma: f64, eps_zero: f64) -> Result<SimilarityMatrix> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite);
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("times must be strictly increasing"));
    }
    let n = times.len();
    let s2 = sigma * sigma;
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        data[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let d = times[i] - times[j];
            let v = (-(d * d) / s2).exp();
            let v = if v < eps_zero { 0.0 } else { v };
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(SimilarityMatrix::new_unchecked(SymMatrix::symmetrized(n, data)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_quality_keeps_similarity() {
        let s = SimilarityMatrix::new(SymMatrix::from_rows(&[[1.0, 0.3], [0.3, 1.0]]).unwrap()).unwrap();
        let q = QualityVector::new(vec![1.0, 1.0]).unwrap();
        let k = build_quality_diversity_kernel(&q, &s).unwrap();
        assert_eq!(k.matrix(), s.matrix());
    }

    #[test]
    fn identity_similarity_gives_squared_quality() {
        let s = SimilarityMatrix::new(SymMatrix::identity(2)).unwrap();
        let q = QualityVector::new(vec![2.0, 3.0]).unwrap();
        let k = build_quality_diversity_kernel(&q, &s).unwrap();
        assert_eq!(k.matrix(), &SymMatrix::from_diag(&[4.0, 9.0]));
    }

    #[test]
    fn hand_product() {
        let s = SimilarityMatrix::new(SymMatrix::from_rows(&[[1.0, 0.5], [0.5, 1.0]]).unwrap()).unwrap();
        let q = QualityVector::new(vec![2.0, 1.0]).unwrap();
        let k = build_quality_diversity_kernel(&q, &s).unwrap();
        assert_eq!(k.matrix(), &SymMatrix::from_rows(&[[4.0, 1.0], [1.0, 1.0]]).unwrap());
        assert!(k.provenance().is_some());
    }

    #[test]
    fn dimension_mismatch() {
        let s = SimilarityMatrix::new(SymMatrix::identity(3)).unwrap();
        let q = QualityVector::new(vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            build_quality_diversity_kernel(&q, &s),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn validation_of_factors() {
        assert!(QualityVector::new(vec![1.0, 0.0]).is_err());
        assert!(QualityVector::new(vec![1.0, f64::NAN]).is_err());
        let indefinite = SymMatrix::from_rows(&[[1.0, 1.0, -1.0], [1.0, 1.0, 1.0], [-1.0, 1.0, 1.0]]).unwrap();
        assert!(matches!(
            SimilarityMatrix::new(indefinite),
            Err(Error::NotPositiveSemiDefinite { .. })
        ));
        assert!(SimilarityMatrix::new(SymMatrix::from_diag(&[1.0, 2.0])).is_err());
        assert!(DppKernel::new(SymMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap()).is_err());
    }

    #[test]
    fn gaussian_similarity_values() {
        let s = gaussian_position_similarity(&[0.0, 2.0, 16.0], 2.0, 1e-12).unwrap();
        assert_eq!(s.matrix().get(0, 0), 1.0);
        assert_abs_diff_eq!(s.matrix().get(0, 1), (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.matrix().get(0, 1), 0.367879, epsilon = 1e-6);
        // 7σ apart: e^{-49} < 1e-12.
        assert_eq!(s.matrix().get(1, 2), 0.0);
        assert!(gaussian_position_similarity(&[1.0, 1.0], 1.0, 0.0).is_err());
        assert!(gaussian_position_similarity(&[1.0, 2.0], 0.0, 0.0).is_err());
    }
}
