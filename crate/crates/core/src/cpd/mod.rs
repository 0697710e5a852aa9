//! Two-step change-point detection: profile peaks become candidates, and a
//! DPP over the candidates picks a diverse, high-quality subset.

mod generate;

pub use generate::{generate_piecewise_gaussian, generate_poisson_events, GaussianSegment, RateSegment};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    build_quality_diversity_kernel, gamma_partition, gaussian_position_similarity, BlockPartition, DppKernel,
    QualityVector, DEFAULT_EPS_ZERO,
};
use crate::map::{bwdpp_map, Greedy, GreedyOptions};
use crate::metrics::{
    dissimilarity_profile, event_profile, glr_poisson, segment_dissimilarity, DissimilarityProfile, EventSequence,
    Metric, MetricOptions, TimeSeries,
};

/// Qualities at or below this are raised to it.
pub const QUALITY_FLOOR: f64 = 1e-9;

/// Profile peaks kept as change-point candidates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CandidateSet {
    pub times: Vec<f64>,
    /// Profile value at each candidate.
    pub values: Vec<f64>,
    /// Position of each candidate in the source profile.
    pub profile_index: Vec<usize>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Local maxima of the profile strictly above its mean.
///
/// Index `i` is a peak when `d[i−1] < d[i] ≥ d[i+1]`, which credits a plateau
/// to its leftmost point. The first and last profile points are never peaks.
pub fn pick_candidates(profile: &DissimilarityProfile) -> CandidateSet {
    let v = &profile.values;
    let mut out = CandidateSet::default();
    if v.len() < 3 {
        return out;
    }
    let mean = profile.mean();
    for i in 1..v.len() - 1 {
        if v[i - 1] < v[i] && v[i] >= v[i + 1] && v[i] > mean {
            out.times.push(profile.times[i]);
            out.values.push(v[i]);
            out.profile_index.push(i);
        }
    }
    out
}

/// `q ← (gain · q / mean(q))^exponent`, or `(gain · q)^exponent` without
/// normalization.
///
/// Greedy selection keeps an item while its conditional gain `q²(1 − …)`
/// exceeds 1. Without normalization `q² > 1` exactly when `gain · d > 1`, so
/// `gain` sets the evidence threshold, while a small exponent flattens large
/// qualities so the similarity term can still veto near-duplicates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QualityTransform {
    pub normalize: bool,
    pub gain: f64,
    pub exponent: f64,
}

impl Default for QualityTransform {
    fn default() -> Self {
        Self::for_metric(Metric::SymKl)
    }
}

impl QualityTransform {
    /// Defaults per metric. The likelihood ratios grow with the window
    /// length, so they get a smaller gain than SymKL.
    pub fn for_metric(metric: Metric) -> Self {
        let gain = match metric {
            Metric::SymKl => 0.3,
            Metric::GlrGaussian | Metric::GlrPoisson => 0.1,
        };
        Self {
            normalize: false,
            gain,
            exponent: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain > 0.0) || !(self.exponent.is_finite() && self.exponent > 0.0) {
            return Err(Error::invalid("quality gain and exponent must be positive"));
        }
        Ok(())
    }

    pub fn apply(&self, raw: &[f64]) -> Vec<f64> {
        let floored: Vec<f64> = raw.iter().map(|&q| q.max(QUALITY_FLOOR)).collect();
        let scale = if self.normalize && !floored.is_empty() {
            self.gain * floored.len() as f64 / floored.iter().sum::<f64>()
        } else {
            self.gain
        };
        floored
            .iter()
            .map(|&q| (scale * q).powf(self.exponent).max(QUALITY_FLOOR))
            .collect()
    }
}

/// Per-candidate qualities, before and after the transform.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateQualities {
    pub raw: Vec<f64>,
    pub q: QualityVector,
    /// Candidates whose neighbouring segments were too short and had to be
    /// widened.
    pub widened: Vec<bool>,
}

/// Quality of each candidate: the metric between the segments reaching to the
/// neighbouring candidates (or the series ends).
///
/// A segment shorter than `min_segment` samples is widened to that length,
/// clipped to the series, and the candidate is marked as widened.
pub fn candidate_quality(
    x: &TimeSeries,
    cand: &CandidateSet,
    metric: Metric,
    opts: &MetricOptions,
    min_segment: usize,
    transform: &QualityTransform,
) -> Result<CandidateQualities> {
    let len = x.len();
    let min_segment = min_segment.max(2);
    let times = integral_times(&cand.times, len)?;
    let mut raw = Vec::with_capacity(times.len());
    let mut widened = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let prev = if i == 0 { 0 } else { times[i - 1] };
        let next = times.get(i + 1).copied().unwrap_or(len);
        let a = prev.min(t.saturating_sub(min_segment));
        let c = next.max((t + min_segment).min(len));
        if t < a + 2 || c < t + 2 {
            return Err(Error::SegmentTooShort {
                len: (t - a).min(c - t),
                min: 2,
            });
        }
        widened.push(a != prev || c != next);
        raw.push(segment_dissimilarity(x, a, t, c, metric, opts)?);
    }
    let q = QualityVector::new(transform.apply(&raw))?;
    Ok(CandidateQualities { raw, q, widened })
}

fn integral_times(times: &[f64], len: usize) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| {
            if t.fract() != 0.0 || t <= 0.0 || t >= len as f64 {
                Err(Error::invalid(format!("candidate time {t} is not an interior sample index")))
            } else {
                Ok(t as usize)
            }
        })
        .collect()
}

/// Poisson-GLR quality for event candidates. Segments run between
/// neighbouring candidates (the first and last event close the ends) and are
/// widened to at least `min_span` time units. A side still holding fewer than
/// two events gets the floor quality and is marked as widened.
pub fn event_candidate_quality(
    events: &EventSequence,
    cand: &CandidateSet,
    min_span: f64,
    transform: &QualityTransform,
) -> Result<CandidateQualities> {
    let ts = &cand.times;
    let mut raw = Vec::with_capacity(ts.len());
    let mut widened = Vec::with_capacity(ts.len());
    for (i, &t) in ts.iter().enumerate() {
        let prev = if i == 0 { events.first() } else { ts[i - 1] };
        let next = ts.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let a = prev.min(t - min_span);
        let c = next.max(t + min_span);
        let left = events.between(a, t);
        let right = events.between(t, c);
        let mut flag = a != prev || c != next;
        let v = if left.len() < 2 || right.len() < 2 {
            flag = true;
            QUALITY_FLOOR
        } else {
            glr_poisson(left, right)?
        };
        widened.push(flag);
        raw.push(v);
    }
    let q = QualityVector::new(transform.apply(&raw))?;
    Ok(CandidateQualities { raw, q, widened })
}

/// DPP kernel over the candidates, with `S_ij = exp(−Δt²/σ²)` and the
/// γ-partition of the result.
pub fn build_cpd_kernel(
    cand: &CandidateSet,
    q: &QualityVector,
    sigma: f64,
    gamma: usize,
    eps_zero: f64,
) -> Result<(DppKernel, BlockPartition)> {
    if cand.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: cand.len(),
            got: q.len(),
        });
    }
    if cand.is_empty() {
        return Err(Error::invalid("cannot build a kernel over zero candidates"));
    }
    let s = gaussian_position_similarity(&cand.times, sigma, eps_zero)?;
    let k = build_quality_diversity_kernel(q, &s)?;
    let p = gamma_partition(&k, gamma, eps_zero);
    Ok((k, p))
}

/// Everything that controls a detection run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    /// Window length: samples for a series, time units for events.
    #[serde(serialize_with = "crate::num::serialize")]
    pub window: f64,
    pub sigma: f64,
    pub gamma: usize,
    pub metric: Metric,
    pub eps_zero: f64,
    /// Defaults to [`QualityTransform::for_metric`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality: Option<QualityTransform>,
    /// Shortest segment used to score a candidate; defaults to the window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality_min_segment: Option<f64>,
    pub require_initial_gain: bool,
    pub metric_options: MetricOptions,
    /// Grid step of event profiles; defaults to a tenth of the window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_step: Option<f64>,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            window: 50.0,
            sigma: 100.0,
            gamma: 2,
            metric: Metric::SymKl,
            eps_zero: DEFAULT_EPS_ZERO,
            quality: None,
            quality_min_segment: None,
            require_initial_gain: false,
            metric_options: MetricOptions::default(),
            event_step: None,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window.is_finite() && self.window > 0.0) {
            return Err(Error::invalid(format!("window must be positive, got {}", self.window)));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.eps_zero.is_finite() && self.eps_zero >= 0.0) {
            return Err(Error::invalid("eps_zero must be non-negative"));
        }
        if let Some(m) = self.quality_min_segment {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::invalid("quality_min_segment must be positive"));
            }
        }
        if let Some(s) = self.event_step {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::invalid("event_step must be positive"));
            }
        }
        self.quality_transform().validate()?;
        self.metric_options.validate()
    }

    pub fn quality_transform(&self) -> QualityTransform {
        self.quality.unwrap_or_else(|| QualityTransform::for_metric(self.metric))
    }

    /// The configuration with every defaulted field spelled out.
    pub fn resolved(&self) -> Self {
        Self {
            quality: Some(self.quality_transform()),
            ..self.clone()
        }
    }

    fn series_window(&self) -> Result<usize> {
        if self.window.fract() != 0.0 || self.window < 2.0 {
            return Err(Error::invalid(format!(
                "series window must be an integer of at least 2, got {}",
                self.window
            )));
        }
        Ok(self.window as usize)
    }

    fn greedy(&self) -> Greedy {
        Greedy(GreedyOptions {
            require_initial_gain: self.require_initial_gain,
            ..Default::default()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    #[serde(serialize_with = "crate::num::serialize")]
    pub t: f64,
    pub d: f64,
    pub q: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub widened: bool,
}

/// Wall-clock time per stage, in milliseconds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub profile: f64,
    pub candidates: f64,
    pub quality: f64,
    pub kernel: f64,
    pub inference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub config: DetectionConfig,
    pub candidates: Vec<CandidateRecord>,
    #[serde(serialize_with = "crate::num::serialize_vec")]
    pub selected: Vec<f64>,
    /// Block sizes of the candidate kernel's partition.
    pub blocks: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<StageTimings>,
}

impl DetectionReport {
    pub fn without_timings(mut self) -> Self {
        self.timings_ms = None;
        self
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Kernel construction and block-wise greedy selection shared by the series
/// and event pipelines.
fn select(
    cfg: &DetectionConfig,
    cand: CandidateSet,
    qual: Option<CandidateQualities>,
    mut timings: StageTimings,
) -> Result<DetectionReport> {
    let Some(qual) = qual else {
        return Ok(DetectionReport {
            config: cfg.resolved(),
            candidates: Vec::new(),
            selected: Vec::new(),
            blocks: Vec::new(),
            timings_ms: Some(timings),
        });
    };
    let t0 = Instant::now();
    let (kernel, partition) = build_cpd_kernel(&cand, &qual.q, cfg.sigma, cfg.gamma, cfg.eps_zero)?;
    timings.kernel = ms(t0);
    let t0 = Instant::now();
    let (sel, _) = bwdpp_map(&kernel, &partition, &cfg.greedy())?;
    timings.inference = ms(t0);
    let candidates = (0..cand.len())
        .map(|i| CandidateRecord {
            t: cand.times[i],
            d: cand.values[i],
            q: qual.q.as_slice()[i],
            widened: qual.widened[i],
        })
        .collect();
    Ok(DetectionReport {
        config: cfg.resolved(),
        candidates,
        selected: sel.iter().map(|&i| cand.times[i]).collect(),
        blocks: partition.block_sizes,
        timings_ms: Some(timings),
    })
}

/// Full detection on a time series. Deterministic in `(x, cfg)` apart from
/// the timings.
pub fn detect_change_points(x: &TimeSeries, cfg: &DetectionConfig) -> Result<DetectionReport> {
    Ok(detect_with_profile(x, cfg)?.0)
}

/// [`detect_change_points`], also returning the dissimilarity profile.
pub fn detect_with_profile(x: &TimeSeries, cfg: &DetectionConfig) -> Result<(DetectionReport, DissimilarityProfile)> {
    cfg.validate()?;
    let w = cfg.series_window()?;
    let mut timings = StageTimings::default();
    let t0 = Instant::now();
    let profile = dissimilarity_profile(x, w, cfg.metric, &cfg.metric_options)?;
    timings.profile = ms(t0);
    let t0 = Instant::now();
    let cand = pick_candidates(&profile);
    timings.candidates = ms(t0);
    let t0 = Instant::now();
    let min_seg = cfg.quality_min_segment.map_or(w, |m| m.ceil() as usize);
    let qual = if cand.is_empty() {
        None
    } else {
        Some(candidate_quality(
            x,
            &cand,
            cfg.metric,
            &cfg.metric_options,
            min_seg,
            &cfg.quality_transform(),
        )?)
    };
    timings.quality = ms(t0);
    let report = select(cfg, cand, qual, timings)?;
    Ok((report, profile))
}

/// [`detect_change_points`] followed by a caller-supplied filter on the
/// selected times (for instance a false-alarm test). The filter may only
/// drop times.
pub fn detect_change_points_filtered<F>(x: &TimeSeries, cfg: &DetectionConfig, filter: F) -> Result<DetectionReport>
where
    F: FnOnce(&TimeSeries, &[f64]) -> Vec<f64>,
{
    let mut report = detect_change_points(x, cfg)?;
    let kept = filter(x, &report.selected);
    if kept.iter().any(|t| !report.selected.contains(t)) {
        return Err(Error::invalid("post-filter introduced a time that was not selected"));
    }
    report.selected = kept;
    Ok(report)
}

/// Detection on event times with the Poisson GLR. `cfg.metric` must be
/// `glr-poisson`.
pub fn detect_event_changes(events: &EventSequence, cfg: &DetectionConfig) -> Result<(DetectionReport, DissimilarityProfile)> {
    cfg.validate()?;
    if cfg.metric != Metric::GlrPoisson {
        return Err(Error::invalid(format!(
            "event data needs the glr-poisson metric, got {}",
            cfg.metric.name()
        )));
    }
    let mut timings = StageTimings::default();
    let t0 = Instant::now();
    let step = cfg.event_step.unwrap_or(cfg.window / 10.0);
    let profile = event_profile(events, cfg.window, step)?;
    timings.profile = ms(t0);
    let t0 = Instant::now();
    let cand = pick_candidates(&profile);
    timings.candidates = ms(t0);
    let t0 = Instant::now();
    let min_span = cfg.quality_min_segment.unwrap_or(cfg.window);
    let qual = if cand.is_empty() {
        None
    } else {
        Some(event_candidate_quality(events, &cand, min_span, &cfg.quality_transform())?)
    };
    timings.quality = ms(t0);
    let report = select(cfg, cand, qual, timings)?;
    Ok((report, profile))
}
