use crate::error::{Error, Result};

/// Strictly increasing event times.
#[derive(Clone, Debug, PartialEq)]
pub struct EventSequence(Vec<f64>);

impl EventSequence {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::SegmentTooShort { len: times.len(), min: 2 });
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite);
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("event times must be strictly increasing"));
        }
        Ok(Self(times))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Events with `from ≤ t < to`.
    pub fn between(&self, from: f64, to: f64) -> &[f64] {
        let a = self.0.partition_point(|&t| t < from);
        let b = self.0.partition_point(|&t| t < to);
        &self.0[a..b.max(a)]
    }
}

/// `(count, span)` of a set of event times.
fn count_and_span(times: &[f64]) -> Result<(usize, f64)> {
    if times.len() < 2 {
        return Err(Error::SegmentTooShort { len: times.len(), min: 2 });
    }
    let lo = times.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span <= 0.0 || span.is_nan() {
        return Err(Error::invalid("event segment has zero time span"));
    }
    Ok((times.len(), span))
}

/// Homogeneous-Poisson log-likelihood at the plug-in rate
/// `λ = (M − 1) / span`, i.e. `(M − 1)·ln λ − span·λ`.
fn poisson_log_likelihood(count: usize, span: f64) -> f64 {
    let k = (count - 1) as f64;
    let lambda = k / span;
    k * lambda.ln() - span * lambda
}

/// Log generalized likelihood ratio of two Poisson rates against one, where
/// the pooled segment is the union of both event lists.
///
/// The plug-in rates use first-to-last spans, so the pooled fit gets one
/// extra interval (the gap between the lists) for free. The value can
/// therefore be negative when that gap is much shorter than the typical
/// spacing; for ordered lists it is bounded below by `1 + ln(gap)`.
pub fn glr_poisson(e1: &[f64], e2: &[f64]) -> Result<f64> {
    let (m1, s1) = count_and_span(e1)?;
    let (m2, s2) = count_and_span(e2)?;
    let lo = e1.iter().chain(e2).copied().fold(f64::INFINITY, f64::min);
    let hi = e1.iter().chain(e2).copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(poisson_log_likelihood(m1, s1) + poisson_log_likelihood(m2, s2)
        - poisson_log_likelihood(m1 + m2, hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn equal_rates() {
        let e1: Vec<f64> = (0..=10).map(f64::from).collect();
        let e2: Vec<f64> = (11..=21).map(f64::from).collect();
        assert_abs_diff_eq!(glr_poisson(&e1, &e2).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn double_rate() {
        let e1: Vec<f64> = (0..=10).map(f64::from).collect();
        let e2: Vec<f64> = (0..21).map(|k| 10.5 + 0.5 * k as f64).collect();
        // 10·(0 − 1) + 20·(ln 2 − 1) − 31·(ln(31/20.5) − 1)
        let want = -10.0 + 20.0 * (2f64.ln() - 1.0) - 31.0 * ((31.0f64 / 20.5).ln() - 1.0);
        let got = glr_poisson(&e1, &e2).unwrap();
        assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        assert_abs_diff_eq!(got, 2.0425, epsilon = 1e-4);
    }

    #[test]
    fn errors() {
        assert!(glr_poisson(&[1.0], &[2.0, 3.0]).is_err());
        assert!(glr_poisson(&[1.0, 1.0], &[2.0, 3.0]).is_err());
        assert!(EventSequence::new(vec![1.0]).is_err());
        assert!(EventSequence::new(vec![2.0, 1.0]).is_err());
    }

    #[test]
    fn close_gap_can_go_negative() {
        let v = glr_poisson(&[0.0, 1.0], &[1.001, 2.001]).unwrap();
        assert!(v < -0.2);
        // By concavity of ln, the value never drops below 1 + ln(gap).
        assert!(v >= 1.0 + (0.001f64).ln());
    }

    #[test]
    fn between_is_half_open() {
        let e = EventSequence::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(e.between(1.0, 3.0), &[1.0, 2.0]);
        assert!(e.between(5.0, 6.0).is_empty());
    }
}
