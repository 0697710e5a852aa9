//! Scoring detections against ground truth, and the MAP benchmark.

mod bench;

pub use bench::{benchmark_map, BenchOptions, GammaAggregate, KernelRecord, MapBenchReport};

use serde::{Deserialize, Serialize};

use crate::cpd::{detect_change_points, detect_event_changes, DetectionConfig};
use crate::error::{Error, Result};
use crate::metrics::{EventSequence, TimeSeries};

/// One-to-one pairing of detected and true change times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// `(detected, truth)` pairs, sorted by truth time.
    pub pairs: Vec<(f64, f64)>,
    pub unmatched_detected: Vec<f64>,
    pub unmatched_truth: Vec<f64>,
    pub tolerance: f64,
}

impl MatchResult {
    pub fn detected_count(&self) -> usize {
        self.pairs.len() + self.unmatched_detected.len()
    }

    pub fn truth_count(&self) -> usize {
        self.pairs.len() + self.unmatched_truth.len()
    }
}

/// Greedy matching: candidate pairs within `tolerance` are taken in order of
/// increasing distance, ties going to the earlier truth time, then the
/// earlier detection, skipping pairs whose ends are already used.
pub fn match_changes(detected: &[f64], truth: &[f64], tolerance: f64) -> MatchResult {
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &d) in detected.iter().enumerate() {
        for (j, &t) in truth.iter().enumerate() {
            let dist = (d - t).abs();
            if dist <= tolerance {
                cands.push((dist, j, i));
            }
        }
    }
    cands.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(truth[a.1].total_cmp(&truth[b.1]))
            .then(detected[a.2].total_cmp(&detected[b.2]))
    });
    let mut used_d = vec![false; detected.len()];
    let mut used_t = vec![false; truth.len()];
    let mut pairs = Vec::new();
    for (_, j, i) in cands {
        if !used_d[i] && !used_t[j] {
            used_d[i] = true;
            used_t[j] = true;
            pairs.push((detected[i], truth[j]));
        }
    }
    pairs.sort_by(|a, b| a.1.total_cmp(&b.1));
    MatchResult {
        pairs,
        unmatched_detected: detected.iter().zip(&used_d).filter(|(_, u)| !**u).map(|(d, _)| *d).collect(),
        unmatched_truth: truth.iter().zip(&used_t).filter(|(_, u)| !**u).map(|(t, _)| *t).collect(),
        tolerance,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Correctly found changes.
    pub cfc: usize,
    pub det: usize,
    pub gt: usize,
    pub tolerance: f64,
}

/// Precision, recall and F1 of a matching.
///
/// With no detections and no truth everything is 1. With no detections but
/// some truth everything is 0. With detections but no truth, precision is 0
/// and recall 1, which gives F1 0.
pub fn precision_recall_f1(m: &MatchResult) -> EvalReport {
    let cfc = m.pairs.len();
    let det = m.detected_count();
    let gt = m.truth_count();
    let (precision, recall) = match (det, gt) {
        (0, 0) => (1.0, 1.0),
        (0, _) => (0.0, 0.0),
        (_, 0) => (0.0, 1.0),
        _ => (cfc as f64 / det as f64, cfc as f64 / gt as f64),
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    EvalReport {
        precision,
        recall,
        f1,
        cfc,
        det,
        gt,
        tolerance: m.tolerance,
    }
}

/// Match and score in one step.
pub fn evaluate(detected: &[f64], truth: &[f64], tolerance: f64) -> EvalReport {
    precision_recall_f1(&match_changes(detected, truth, tolerance))
}

/// One detector setting on a ROC curve: `TPR = recall`, `FPR = 1 − precision`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub sigma: f64,
    pub fpr: f64,
    pub tpr: f64,
    pub f1: f64,
}

fn sweep<F>(sigma_grid: &[f64], truth: &[f64], tolerance: f64, mut detect: F) -> Result<Vec<RocPoint>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    if sigma_grid.is_empty() {
        return Err(Error::invalid("sigma grid is empty"));
    }
    if sigma_grid.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::invalid("sigma grid values must be positive"));
    }
    let mut grid = sigma_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.iter()
        .map(|&sigma| {
            let r = evaluate(&detect(sigma)?, truth, tolerance);
            Ok(RocPoint {
                sigma,
                fpr: 1.0 - r.precision,
                tpr: r.recall,
                f1: r.f1,
            })
        })
        .collect()
}

/// Detect once per `σ` in the grid and score each run. Points come back
/// sorted by `σ`.
pub fn roc_sweep(
    x: &TimeSeries,
    truth: &[f64],
    cfg: &DetectionConfig,
    sigma_grid: &[f64],
    tolerance: f64,
) -> Result<Vec<RocPoint>> {
    sweep(sigma_grid, truth, tolerance, |sigma| {
        let c = DetectionConfig { sigma, ..cfg.clone() };
        Ok(detect_change_points(x, &c)?.selected)
    })
}

/// [`roc_sweep`] for event data.
pub fn roc_sweep_events(
    events: &EventSequence,
    truth: &[f64],
    cfg: &DetectionConfig,
    sigma_grid: &[f64],
    tolerance: f64,
) -> Result<Vec<RocPoint>> {
    sweep(sigma_grid, truth, tolerance, |sigma| {
        let c = DetectionConfig { sigma, ..cfg.clone() };
        Ok(detect_event_changes(events, &c)?.0.selected)
    })
}
