use serde::{Deserialize, Serialize};

use super::{glr_gaussian, glr_poisson, segment_stats_regularized, symkl, EventSequence, Metric, MetricOptions, TimeSeries};
use crate::error::{Error, Result};

/// Dissimilarity between adjacent windows, indexed by split time.
///
/// For a time series the split times are sample indices `w..=T − w`; the
/// left window is `[t − w, t)` and the right one `[t, t + w)`. For events
/// the split times lie on a regular grid and windows are time intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissimilarityProfile {
    pub window: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl DissimilarityProfile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len().max(1) as f64
    }
}

/// `d(x[a..b], x[b..c])` for the chosen series metric.
pub fn segment_dissimilarity(
    x: &TimeSeries,
    a: usize,
    b: usize,
    c: usize,
    metric: Metric,
    opts: &MetricOptions,
) -> Result<f64> {
    let left = x.window(a, b)?;
    let right = x.window(b, c)?;
    let dim = x.dim();
    match metric {
        Metric::SymKl => symkl(
            &segment_stats_regularized(left, dim, opts)?,
            &segment_stats_regularized(right, dim, opts)?,
        ),
        Metric::GlrGaussian => glr_gaussian(left, right, dim, opts),
        Metric::GlrPoisson => Err(Error::invalid("glr-poisson applies to event data, not a time series")),
    }
}

/// Profile of a time series with windows of `w` samples.
pub fn dissimilarity_profile(
    x: &TimeSeries,
    w: usize,
    metric: Metric,
    opts: &MetricOptions,
) -> Result<DissimilarityProfile> {
    if w < 2 {
        return Err(Error::invalid(format!("window must be at least 2 samples, got {w}")));
    }
    let len = x.len();
    if len < 2 * w {
        return Err(Error::SeriesTooShort { len, min: 2 * w });
    }
    let mut times = Vec::with_capacity(len - 2 * w + 1);
    let mut values = Vec::with_capacity(len - 2 * w + 1);
    for t in w..=len - w {
        times.push(t as f64);
        values.push(segment_dissimilarity(x, t - w, t, t + w, metric, opts)?);
    }
    Ok(DissimilarityProfile {
        window: w as f64,
        times,
        values,
    })
}

/// Poisson GLR profile of an event sequence: split times run from
/// `first + w` to `last − w` in steps of `step`, with windows
/// `[t − w, t)` and `[t, t + w)`. A window holding fewer than two events
/// scores 0.
pub fn event_profile(events: &EventSequence, w: f64, step: f64) -> Result<DissimilarityProfile> {
    if !(w.is_finite() && w > 0.0) || !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid("event window and grid step must be positive"));
    }
    let (first, last) = (events.first(), events.last());
    if last - first < 2.0 * w {
        return Err(Error::invalid(format!(
            "events span {} but two windows need {}",
            last - first,
            2.0 * w
        )));
    }
    let count = ((last - first - 2.0 * w) / step + 1e-9).floor() as usize + 1;
    let mut times = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    for k in 0..count {
        let t = first + w + k as f64 * step;
        let left = events.between(t - w, t);
        let right = events.between(t, t + w);
        let v = if left.len() < 2 || right.len() < 2 {
            0.0
        } else {
            glr_poisson(left, right)?
        };
        times.push(t);
        values.push(v);
    }
    Ok(DissimilarityProfile { window: w, times, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn constant_series_has_flat_zero_profile() {
        let x = TimeSeries::univariate(vec![2.5; 40]).unwrap();
        for metric in [Metric::SymKl, Metric::GlrGaussian] {
            let p = dissimilarity_profile(&x, 5, metric, &MetricOptions::default()).unwrap();
            assert_eq!(p.len(), 31);
            assert_eq!(p.times[0], 5.0);
            assert!(p.values.iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn too_short() {
        let x = TimeSeries::univariate(vec![0.0; 9]).unwrap();
        assert!(matches!(
            dissimilarity_profile(&x, 5, Metric::SymKl, &MetricOptions::default()),
            Err(Error::SeriesTooShort { len: 9, min: 10 })
        ));
        let x = TimeSeries::univariate(vec![0.0; 10]).unwrap();
        assert_eq!(
            dissimilarity_profile(&x, 5, Metric::SymKl, &MetricOptions::default()).unwrap().len(),
            1
        );
        assert!(dissimilarity_profile(&x, 5, Metric::GlrPoisson, &MetricOptions::default()).is_err());
    }

    #[test]
    fn mean_shift_peaks_at_change() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..300)
            .map(|t| noise.sample(&mut rng) + if t >= 170 { 4.0 } else { 0.0 })
            .collect();
        let x = TimeSeries::univariate(xs).unwrap();
        for metric in [Metric::SymKl, Metric::GlrGaussian] {
            let p = dissimilarity_profile(&x, 30, metric, &MetricOptions::default()).unwrap();
            let (best, _) = p
                .values
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
            assert!((p.times[best] - 170.0).abs() <= 2.0, "{metric:?}: {}", p.times[best]);
        }
    }

    #[test]
    fn event_profile_grid_and_sparse_windows() {
        let e = EventSequence::new((0..=20).map(f64::from).collect()).unwrap();
        let p = event_profile(&e, 5.0, 0.5).unwrap();
        assert_eq!(p.times.first(), Some(&5.0));
        assert_eq!(p.times.last(), Some(&15.0));
        assert_eq!(p.len(), 21);
        let sparse = EventSequence::new(vec![0.0, 10.0, 20.0]).unwrap();
        let p = event_profile(&sparse, 5.0, 1.0).unwrap();
        assert!(p.values.iter().all(|&v| v == 0.0));
        assert!(event_profile(&sparse, 11.0, 1.0).is_err());
    }
}
