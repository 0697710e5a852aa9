use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{cholesky_psd, SymMatrix};
use crate::metrics::{EventSequence, TimeSeries};

/// A stationary Gaussian stretch of a synthetic series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSegment {
    pub length: usize,
    pub mean: Vec<f64>,
    /// Covariance rows; must be symmetric PSD.
    pub cov: Vec<Vec<f64>>,
}

impl GaussianSegment {
    /// One-dimensional segment with standard deviation `std`.
    pub fn univariate(length: usize, mean: f64, std: f64) -> Self {
        Self {
            length,
            mean: vec![mean],
            cov: vec![vec![std * std]],
        }
    }
}

/// A homogeneous Poisson stretch of a synthetic event stream.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSegment {
    pub duration: f64,
    pub rate: f64,
}

/// Concatenated independent Gaussian segments. Returns the series and the
/// index of the first sample of every segment after the first.
pub fn generate_piecewise_gaussian(seed: u64, segments: &[GaussianSegment]) -> Result<(TimeSeries, Vec<usize>)> {
    let Some(first) = segments.first() else {
        return Err(Error::invalid("need at least one segment"));
    };
    let dim = first.mean.len();
    if dim == 0 {
        return Err(Error::invalid("segment mean must not be empty"));
    }
    let mut factors = Vec::with_capacity(segments.len());
    for (k, s) in segments.iter().enumerate() {
        if s.length < 2 {
            return Err(Error::invalid(format!("segment {k} has length {}, need at least 2", s.length)));
        }
        if s.mean.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.mean.len(),
            });
        }
        if s.cov.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.cov.len(),
            });
        }
        let cov = SymMatrix::from_rows(&s.cov)
            .map_err(|e| Error::invalid(format!("segment {k} covariance: {e}")))?;
        let f = cholesky_psd(&cov, 1e-12).map_err(|e| Error::invalid(format!("segment {k} covariance: {e}")))?;
        factors.push(f);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: usize = segments.iter().map(|s| s.length).sum();
    let mut data = Vec::with_capacity(total * dim);
    let mut truth = Vec::with_capacity(segments.len() - 1);
    let mut z = vec![0.0; dim];
    for (k, (s, f)) in segments.iter().zip(&factors).enumerate() {
        if k > 0 {
            truth.push(data.len() / dim);
        }
        for _ in 0..s.length {
            for v in z.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            for i in 0..dim {
                let mut x = s.mean[i];
                for (j, zj) in z.iter().enumerate().take(i + 1) {
                    x += f.get(i, j) * zj;
                }
                data.push(x);
            }
        }
    }
    Ok((TimeSeries::new(dim, data)?, truth))
}

/// Concatenated homogeneous Poisson processes starting at time 0. Returns the
/// events and the segment boundaries.
pub fn generate_poisson_events(seed: u64, segments: &[RateSegment]) -> Result<(EventSequence, Vec<f64>)> {
    if segments.is_empty() {
        return Err(Error::invalid("need at least one rate segment"));
    }
    for (k, s) in segments.iter().enumerate() {
        if !(s.duration.is_finite() && s.duration > 0.0) || !(s.rate.is_finite() && s.rate > 0.0) {
            return Err(Error::invalid(format!("segment {k} needs positive duration and rate")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    let mut truth = Vec::with_capacity(segments.len() - 1);
    let mut start = 0.0;
    for (k, s) in segments.iter().enumerate() {
        if k > 0 {
            truth.push(start);
        }
        let gap = Exp::new(s.rate).map_err(|e| Error::invalid(e.to_string()))?;
        let end = start + s.duration;
        let mut t = start;
        loop {
            t += gap.sample(&mut rng);
            if t >= end {
                break;
            }
            events.push(t);
        }
        start = end;
    }
    Ok((EventSequence::new(events)?, truth))
}
