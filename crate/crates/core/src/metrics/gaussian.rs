use std::f64::consts::PI;

use super::{MetricOptions, TimeSeries};
use crate::error::{Error, Result};
use crate::matrix::{inverse_spd, log_det_with_tol, SymMatrix};

/// Pivot tolerance for the regularized covariances. Regularization keeps
/// them positive definite, so only pathological inputs get near this.
const COV_TOL: f64 = 1e-14;

/// Sample mean and regularized maximum-likelihood covariance of a segment.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentStats {
    pub count: usize,
    pub mean: Vec<f64>,
    pub cov: SymMatrix,
}

/// Mean and MLE scatter (denominator `M`) of a block of rows.
#[derive(Clone, Debug)]
struct Moments {
    count: usize,
    mean: Vec<f64>,
    scatter: Vec<f64>,
}

impl Moments {
    fn of(rows: &[f64], dim: usize) -> Result<Self> {
        let count = rows.len() / dim;
        if count < 2 {
            return Err(Error::SegmentTooShort { len: count, min: 2 });
        }
        let mut mean = vec![0.0; dim];
        for r in rows.chunks_exact(dim) {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= count as f64);
        let mut scatter = vec![0.0; dim * dim];
        let mut c = vec![0.0; dim];
        for r in rows.chunks_exact(dim) {
            for k in 0..dim {
                c[k] = r[k] - mean[k];
            }
            for i in 0..dim {
                for j in i..dim {
                    scatter[i * dim + j] += c[i] * c[j];
                }
            }
        }
        for i in 0..dim {
            for j in i..dim {
                let v = scatter[i * dim + j] / count as f64;
                scatter[i * dim + j] = v;
                scatter[j * dim + i] = v;
            }
        }
        Ok(Self { count, mean, scatter })
    }

    fn pooled(a: &Self, b: &Self) -> Self {
        let dim = a.mean.len();
        let (na, nb) = (a.count as f64, b.count as f64);
        let n = na + nb;
        let diff: Vec<f64> = a.mean.iter().zip(&b.mean).map(|(x, y)| x - y).collect();
        let mean = a.mean.iter().zip(&b.mean).map(|(x, y)| (na * x + nb * y) / n).collect();
        let between = na * nb / (n * n);
        let mut scatter = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let k = i * dim + j;
                scatter[k] = (na * a.scatter[k] + nb * b.scatter[k]) / n + between * diff[i] * diff[j];
            }
        }
        Self {
            count: a.count + b.count,
            mean,
            scatter,
        }
    }

    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn mean_diag(&self) -> f64 {
        let d = self.dim();
        (0..d).map(|i| self.scatter[i * d + i]).sum::<f64>() / d as f64
    }

    /// The scatter matrix, optionally reduced to its diagonal.
    fn scatter_matrix(&self, diagonal: bool) -> SymMatrix {
        let d = self.dim();
        let mut s = self.scatter.clone();
        if diagonal {
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        s[i * d + j] = 0.0;
                    }
                }
            }
        }
        SymMatrix::symmetrized(d, s)
    }

    /// Gaussian log-likelihood of the segment at mean `μ̂` and covariance
    /// `S + δI`.
    fn log_likelihood(&self, delta: f64, diagonal: bool) -> Result<f64> {
        let d = self.dim();
        let s = self.scatter_matrix(diagonal);
        let sigma = s.shifted(delta);
        let ld = log_det_with_tol(&sigma, COV_TOL)?;
        let inv = inverse_spd(&sigma, COV_TOL)?;
        let tr: f64 = inv.as_slice().iter().zip(s.as_slice()).map(|(a, b)| a * b).sum();
        Ok(-0.5 * self.count as f64 * (d as f64 * (2.0 * PI).ln() + ld + tr))
    }
}

/// Mean and `Σ̂ + δ_reg·I` of samples `from..to`, with the MLE covariance.
pub fn segment_stats(x: &TimeSeries, from: usize, to: usize, delta_reg: f64) -> Result<SegmentStats> {
    if !(delta_reg.is_finite() && delta_reg >= 0.0) {
        return Err(Error::invalid(format!("regularization must be non-negative, got {delta_reg}")));
    }
    let m = Moments::of(x.window(from, to)?, x.dim())?;
    Ok(SegmentStats {
        count: m.count,
        cov: m.scatter_matrix(false).shifted(delta_reg),
        mean: m.mean,
    })
}

/// [`segment_stats`] with `δ_reg` and the covariance model taken from
/// `opts`, applied to a raw window of rows.
pub fn segment_stats_regularized(rows: &[f64], dim: usize, opts: &MetricOptions) -> Result<SegmentStats> {
    let m = Moments::of(rows, dim)?;
    let delta = opts.delta(m.mean_diag());
    Ok(SegmentStats {
        count: m.count,
        cov: m.scatter_matrix(opts.diagonal_covariance).shifted(delta),
        mean: m.mean,
    })
}

/// Symmetric KL divergence between the Gaussians fitted to two segments
/// (without the conventional factor ½).
pub fn symkl(s1: &SegmentStats, s2: &SegmentStats) -> Result<f64> {
    let d = s1.mean.len();
    if s2.mean.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: s2.mean.len(),
        });
    }
    let inv1 = inverse_spd(&s1.cov, COV_TOL)?;
    let inv2 = inverse_spd(&s2.cov, COV_TOL)?;
    let tr = |a: &SymMatrix, b: &SymMatrix| -> f64 { a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum() };
    let t12 = tr(&s1.cov, &inv2);
    let t21 = tr(&s2.cov, &inv1);
    let diff: Vec<f64> = s1.mean.iter().zip(&s2.mean).map(|(a, b)| a - b).collect();
    let mut quad = 0.0;
    for i in 0..d {
        for j in 0..d {
            quad += (inv1.get(i, j) + inv2.get(i, j)) * diff[i] * diff[j];
        }
    }
    Ok(t12 + t21 - 2.0 * d as f64 + quad)
}

/// Log generalized likelihood ratio of "two Gaussians" against "one
/// Gaussian" for two segments given as row-major windows.
///
/// All three fits share the regularization `δ` derived from the pooled
/// covariance. With a common `δ` the split fit can never score below the
/// pooled one, so the result is non-negative up to rounding.
pub fn glr_gaussian(x1: &[f64], x2: &[f64], dim: usize, opts: &MetricOptions) -> Result<f64> {
    if dim == 0 || !x1.len().is_multiple_of(dim) || !x2.len().is_multiple_of(dim) {
        return Err(Error::invalid("segment length is not a multiple of the dimension"));
    }
    let a = Moments::of(x1, dim)?;
    let b = Moments::of(x2, dim)?;
    let pooled = Moments::pooled(&a, &b);
    let delta = opts.delta(pooled.mean_diag());
    let diag = opts.diagonal_covariance;
    Ok(a.log_likelihood(delta, diag)? + b.log_likelihood(delta, diag)? - pooled.log_likelihood(delta, diag)?)
}
