//! Windowed means of heartbeat (RR) intervals.

use serde::{Deserialize, Serialize};

use crate::error::{construction, Result};

/// Reference RR levels for rest and stress, with their spreads (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrReference {
    pub rest: f64,
    pub stress: f64,
    pub sigma_rest: f64,
    pub sigma_stress: f64,
}

impl Default for RrReference {
    fn default() -> Self {
        RrReference { rest: 0.85, stress: 0.75, sigma_rest: 0.14, sigma_stress: 0.06 }
    }
}

impl RrReference {
    pub fn validate(&self) -> Result<()> {
        if !(self.stress > 0.0 && self.stress < self.rest) {
            return Err(construction("stress RR must be positive and below rest RR"));
        }
        if self.sigma_rest < 0.0 || self.sigma_stress < 0.0 {
            return Err(construction("RR spreads must be non-negative"));
        }
        Ok(())
    }
}

/// Mean of the samples with timestamp in `(t_end - len, t_end]`.
pub fn rr_window_mean(samples: &[(f64, f64)], t_end: f64, len: f64) -> Option<f64> {
    let (sum, n) = samples
        .iter()
        .filter(|(t, _)| *t > t_end - len && *t <= t_end)
        .fold((0.0, 0usize), |(s, n), (_, rr)| (s + rr, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Result of closing one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowMean {
    pub t_end: f64,
    /// Window mean, or the previous mean held over an empty window.
    pub mean: Option<f64>,
    pub samples: usize,
    /// True when the window had no samples.
    pub gap: bool,
}

/// RR sample store with hold-last behaviour across empty windows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RrStream {
    samples: Vec<(f64, f64)>,
    last_mean: Option<f64>,
}

impl RrStream {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a beat interval; non-positive or non-finite values are dropped.
    pub fn push(&mut self, t: f64, rr: f64) -> bool {
        if rr > 0.0 && rr.is_finite() {
            self.samples.push((t, rr));
            true
        } else {
            false
        }
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn window(&mut self, t_end: f64, len: f64) -> WindowMean {
        let n = self
            .samples
            .iter()
            .filter(|(t, _)| *t > t_end - len && *t <= t_end)
            .count();
        match rr_window_mean(&self.samples, t_end, len) {
            Some(m) => {
                self.last_mean = Some(m);
                WindowMean { t_end, mean: Some(m), samples: n, gap: false }
            }
            None => WindowMean { t_end, mean: self.last_mean, samples: 0, gap: true },
        }
    }

    /// Drops samples older than `t`.
    pub fn prune_before(&mut self, t: f64) {
        self.samples.retain(|(ts, _)| *ts > t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_pair() {
        let s: Vec<(f64, f64)> = (0..40).map(|i| (i as f64, 0.8)).collect();
        assert!((rr_window_mean(&s, 35.0, 30.0).unwrap() - 0.8).abs() < 1e-15);
        let s = [(1.0, 0.7), (2.0, 0.9)];
        assert!((rr_window_mean(&s, 30.0, 30.0).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn empty_window_holds_previous() {
        let mut st = RrStream::new();
        st.push(5.0, 0.9);
        let w1 = st.window(30.0, 30.0);
        assert_eq!(w1.mean, Some(0.9));
        let w2 = st.window(60.0, 30.0);
        assert!(w2.gap);
        assert_eq!(w2.mean, Some(0.9));
        let mut fresh = RrStream::new();
        assert_eq!(fresh.window(30.0, 30.0).mean, None);
    }

    #[test]
    fn rejects_bad_samples() {
        let mut st = RrStream::new();
        assert!(!st.push(0.0, 0.0));
        assert!(!st.push(0.0, f64::NAN));
        assert!(st.samples().is_empty());
    }

    #[test]
    fn reference_validation() {
        assert!(RrReference::default().validate().is_ok());
        let bad = RrReference { rest: 0.7, stress: 0.8, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
