//! Segment dissimilarities for change-point detection.

mod gaussian;
mod poisson;
mod profile;

pub use gaussian::{glr_gaussian, segment_stats, segment_stats_regularized, symkl, SegmentStats};
pub use poisson::{glr_poisson, EventSequence};
pub use profile::{dissimilarity_profile, event_profile, segment_dissimilarity, DissimilarityProfile};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which dissimilarity to evaluate between adjacent windows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "symkl")]
    SymKl,
    #[serde(rename = "glr-gaussian")]
    GlrGaussian,
    #[serde(rename = "glr-poisson")]
    GlrPoisson,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::SymKl => "symkl",
            Metric::GlrGaussian => "glr-gaussian",
            Metric::GlrPoisson => "glr-poisson",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "symkl" => Ok(Metric::SymKl),
            "glr-gaussian" | "glr" => Ok(Metric::GlrGaussian),
            "glr-poisson" => Ok(Metric::GlrPoisson),
            other => Err(Error::invalid(format!(
                "unknown metric '{other}' (expected symkl, glr-gaussian or glr-poisson)"
            ))),
        }
    }
}

/// Covariance regularization `δ = relative · mean(diag Σ) + absolute`, and
/// the covariance model used by the Gaussian metrics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricOptions {
    pub reg_relative: f64,
    pub reg_absolute: f64,
    /// Use only the diagonal of each sample covariance.
    pub diagonal_covariance: bool,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            reg_relative: 1e-6,
            reg_absolute: 1e-9,
            diagonal_covariance: false,
        }
    }
}

impl MetricOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.reg_relative) || !ok(self.reg_absolute) {
            return Err(Error::invalid("regularization constants must be finite and non-negative"));
        }
        Ok(())
    }

    pub(crate) fn delta(&self, mean_diag: f64) -> f64 {
        self.reg_relative * mean_diag + self.reg_absolute
    }
}

/// `T × D` observations, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    len: usize,
    dim: usize,
    data: Vec<f64>,
}

impl TimeSeries {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("time series dimension must be at least 1"));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} values cannot form a non-empty series of dimension {dim}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            len: data.len() / dim,
            dim,
            data,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(bad) = rows.iter().position(|r| r.as_ref().len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: rows[bad].as_ref().len(),
            });
        }
        Self::new(dim, rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect())
    }

    /// A one-dimensional series.
    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Samples `from..to`.
    pub fn window(&self, from: usize, to: usize) -> Result<&[f64]> {
        if from > to || to > self.len {
            return Err(Error::invalid(format!(
                "window {from}..{to} outside series of length {}",
                self.len
            )));
        }
        Ok(&self.data[from * self.dim..to * self.dim])
    }
}
