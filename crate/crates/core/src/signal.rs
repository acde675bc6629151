//! Introspective signal processing over the evidence and distance streams.
//!
//! A [`RollingWindow`] holds the last `W` evidence scores and geodesic
//! distances for the active goal. Each [`RollingWindow::update`] returns a
//! [`SignalSummary`] with the windowed mean and variance, the derived
//! stability score, the progress velocity and the information gain.
//!
//! The windowed mean and M2 are maintained incrementally (add/remove Welford
//! updates), so each update is O(1) in the window size.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("invalid clip bounds: lo = {lo} > hi = {hi}")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("invalid signal parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
}

/// `max(lo, min(x, hi))`.
pub fn clip(x: f64, lo: f64, hi: f64) -> Result<f64, SignalError> {
    if lo > hi {
        return Err(SignalError::InvalidBounds { lo, hi });
    }
    Ok(clamp_unchecked(x, lo, hi))
}

#[inline]
pub(crate) fn clamp_unchecked(x: f64, lo: f64, hi: f64) -> f64 {
    lo.max(x.min(hi))
}

/// One step of telemetry for the active goal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSample {
    pub step: u64,
    /// Geodesic distance to the active goal in meters. `f64::INFINITY` when
    /// the goal cannot be reached.
    pub distance: f64,
    /// Raw perception score in `[0, 1]`.
    pub evidence: f64,
}

impl SignalSample {
    pub fn new(step: u64, distance: f64, evidence: f64) -> Self {
        Self {
            step,
            distance,
            evidence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalParams {
    pub window: usize,
    /// EMA decay for the smoothed score. `None` uses the simple moving mean.
    pub ema_alpha: Option<f64>,
    /// Variance normalization constant for the stability score.
    pub sigma_norm: f64,
    pub epsilon: f64,
    /// Agent displacement per primitive step, meters.
    pub step_length: f64,
}

impl Default for SignalParams {
    fn default() -> Self {
        Self {
            window: 5,
            ema_alpha: None,
            sigma_norm: 0.05,
            epsilon: 1e-6,
            step_length: 0.25,
        }
    }
}

impl SignalParams {
    pub fn validate(&self) -> Result<(), SignalError> {
        if self.window < 2 {
            return Err(SignalError::InvalidParam {
                name: "window",
                reason: format!("must be >= 2, got {}", self.window),
            });
        }
        if let Some(alpha) = self.ema_alpha {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(SignalError::InvalidParam {
                    name: "ema_alpha",
                    reason: format!("must lie in (0, 1), got {alpha}"),
                });
            }
        }
        for (name, v) in [
            ("sigma_norm", self.sigma_norm),
            ("epsilon", self.epsilon),
            ("step_length", self.step_length),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SignalError::InvalidParam {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Statistics of the evidence window after one update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSummary {
    pub mean: f64,
    pub variance: f64,
    /// Variance of the full window that ended `W` steps earlier, if any.
    pub prev_variance: f64,
    pub stability: f64,
    pub velocity: f64,
    pub info_gain: f64,
    /// Number of samples in the window.
    pub fill: usize,
    /// True when `fill == W`.
    pub full: bool,
    /// True when `prev_variance` refers to a genuine full window.
    pub prev_full: bool,
}

/// `1 - clip(variance / (sigma_norm + epsilon), 0, 1)`.
pub fn stability(variance: f64, params: &SignalParams) -> f64 {
    1.0 - clamp_unchecked(variance / (params.sigma_norm + params.epsilon), 0.0, 1.0)
}

/// Normalized rate of geodesic distance reduction over the window, clipped to
/// `[-1, 1]`. Positive means the agent is closing in on the goal.
///
/// Windows with fewer than two samples report a neutral `0`. An unreachable
/// goal (infinite newest distance) reports full retreat, `-1`, as the clip of
/// `-inf` would.
pub fn progress_velocity(window: &RollingWindow, params: &SignalParams) -> f64 {
    let n = window.distances.len();
    if n < 2 {
        return 0.0;
    }
    let oldest = window.distances[0];
    let newest = window.distances[n - 1];
    if !newest.is_finite() {
        return -1.0;
    }
    if !oldest.is_finite() {
        return 1.0;
    }
    let raw = (oldest - newest) / ((n - 1) as f64 * params.step_length);
    clamp_unchecked(raw, -1.0, 1.0)
}

/// Reduction in evidence variance between the previous full window and the
/// current one. Zero unless both windows were full.
pub fn info_gain(prev: &SignalSummary, now: &SignalSummary) -> f64 {
    if prev.full && now.full {
        prev.variance - now.variance
    } else {
        0.0
    }
}

/// Fixed-capacity window over the most recent evidence scores and distances.
#[derive(Debug, Clone)]
pub struct RollingWindow {
    capacity: usize,
    evidence: VecDeque<f64>,
    distances: VecDeque<f64>,
    mean: f64,
    m2: f64,
    ema: f64,
    /// Summaries of the last `W` updates, oldest first.
    history: VecDeque<SignalSummary>,
}

impl RollingWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 2, "rolling window needs capacity >= 2");
        Self {
            capacity,
            evidence: VecDeque::with_capacity(capacity),
            distances: VecDeque::with_capacity(capacity),
            mean: 0.0,
            m2: 0.0,
            ema: 0.0,
            history: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.evidence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evidence.is_empty()
    }

    pub fn evidence(&self) -> impl Iterator<Item = f64> + '_ {
        self.evidence.iter().copied()
    }

    pub fn distances(&self) -> impl Iterator<Item = f64> + '_ {
        self.distances.iter().copied()
    }

    /// Drop all samples and the smoothed score (goal context reset).
    pub fn reset(&mut self) {
        self.evidence.clear();
        self.distances.clear();
        self.mean = 0.0;
        self.m2 = 0.0;
        self.ema = 0.0;
        self.history.clear();
    }

    fn push_evidence(&mut self, x: f64) {
        if self.evidence.len() == self.capacity {
            let y = self.evidence.pop_front().expect("window is full");
            let n = self.evidence.len() + 1;
            if n == 1 {
                self.mean = 0.0;
                self.m2 = 0.0;
            } else {
                let old_mean = self.mean;
                self.mean = (n as f64 * old_mean - y) / (n - 1) as f64;
                self.m2 -= (y - old_mean) * (y - self.mean);
            }
        }
        self.evidence.push_back(x);
        let n = self.evidence.len() as f64;
        let delta = x - self.mean;
        self.mean += delta / n;
        self.m2 += delta * (x - self.mean);
        if self.m2 < 0.0 {
            self.m2 = 0.0;
        }
    }

    /// Advance the window by one sample and recompute every statistic.
    pub fn update(&mut self, sample: &SignalSample, params: &SignalParams) -> SignalSummary {
        self.push_evidence(sample.evidence);
        if self.distances.len() == self.capacity {
            self.distances.pop_front();
        }
        self.distances.push_back(sample.distance);

        let n = self.evidence.len();
        let centered_var = self.m2 / n as f64;
        let (mean, variance) = match params.ema_alpha {
            None => (self.mean, centered_var),
            Some(alpha) => {
                self.ema = alpha * self.ema + (1.0 - alpha) * sample.evidence;
                // Mean squared deviation around the EMA instead of the window mean.
                let offset = self.mean - self.ema;
                (self.ema, centered_var + offset * offset)
            }
        };

        let full = n == self.capacity;
        let (prev_variance, prev_full) = if self.history.len() == self.capacity {
            let prev = &self.history[0];
            (prev.variance, prev.full)
        } else {
            (0.0, false)
        };

        let mut summary = SignalSummary {
            mean,
            variance,
            prev_variance,
            // Unassessed until the window fills.
            stability: if full { stability(variance, params) } else { 0.0 },
            velocity: progress_velocity(self, params),
            info_gain: 0.0,
            fill: n,
            full,
            prev_full,
        };
        if prev_full {
            let prev = self.history[0];
            summary.info_gain = info_gain(&prev, &summary);
        }

        if self.history.len() == self.capacity {
            self.history.pop_front();
        }
        self.history.push_back(summary);
        summary
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pass(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        (mean, var)
    }

    fn feed(values: &[f64], params: &SignalParams) -> (RollingWindow, SignalSummary) {
        let mut w = RollingWindow::new(params.window);
        let mut last = None;
        for (i, &v) in values.iter().enumerate() {
            last = Some(w.update(&SignalSample::new(i as u64 + 1, 10.0, v), params));
        }
        (w, last.unwrap())
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip(1.5, 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(clip(0.3, 0.0, 1.0).unwrap(), 0.3);
        assert_eq!(clip(-2.0, 0.0, 1.0).unwrap(), 0.0);
        assert!(matches!(
            clip(0.0, 1.0, 0.0),
            Err(SignalError::InvalidBounds { .. })
        ));
    }

    #[test]
    fn constant_stream_has_zero_variance() {
        let p = SignalParams::default();
        let (_, s) = feed(&[0.2; 5], &p);
        assert!((s.mean - 0.2).abs() < 1e-12);
        assert!(s.variance.abs() < 1e-12);
        assert_eq!(s.stability, 1.0);
    }

    #[test]
    fn two_sample_partial_window() {
        let p = SignalParams::default();
        let (w, s) = feed(&[0.0, 1.0], &p);
        assert_eq!(w.len(), 2);
        assert!((s.mean - 0.5).abs() < 1e-12);
        assert!((s.variance - 0.25).abs() < 1e-12);
        assert!(!s.full);
    }

    #[test]
    fn stability_waits_for_a_full_window() {
        let p = SignalParams::default();
        let (_, s) = feed(&[0.7], &p);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.stability, 0.0);
        let (_, s) = feed(&[0.7; 4], &p);
        assert_eq!(s.stability, 0.0);
        let (_, s) = feed(&[0.7; 5], &p);
        assert_eq!(s.stability, 1.0);
        assert_eq!(s.velocity, 0.0);
        assert_eq!(s.info_gain, 0.0);
    }

    #[test]
    fn stability_examples() {
        let p = SignalParams::default();
        assert_eq!(stability(0.0, &p), 1.0);
        let at_sigma = stability(p.sigma_norm, &p);
        let expected = 1e-6 / (p.sigma_norm + 1e-6);
        assert!((at_sigma - expected).abs() < 1e-12);
        assert_eq!(stability(2.0 * p.sigma_norm, &p), 0.0);
    }

    fn window_with_distances(ds: &[f64], params: &SignalParams) -> RollingWindow {
        let mut w = RollingWindow::new(params.window);
        for (i, &d) in ds.iter().enumerate() {
            w.update(&SignalSample::new(i as u64, d, 0.1), params);
        }
        w
    }

    #[test]
    fn velocity_examples() {
        let p = SignalParams::default();
        let w = window_with_distances(&[10.0, 9.75, 9.5, 9.25, 9.0], &p);
        assert!((progress_velocity(&w, &p) - 1.0).abs() < 1e-12);
        let w = window_with_distances(&[4.0; 5], &p);
        assert_eq!(progress_velocity(&w, &p), 0.0);
        let w = window_with_distances(&[9.0, 9.25, 9.5], &p);
        assert!((progress_velocity(&w, &p) + 1.0).abs() < 1e-12);
        let w = window_with_distances(&[9.0], &p);
        assert_eq!(progress_velocity(&w, &p), 0.0);
    }

    #[test]
    fn velocity_of_unreachable_goal_is_full_retreat() {
        let p = SignalParams::default();
        let w = window_with_distances(&[f64::INFINITY; 5], &p);
        assert_eq!(progress_velocity(&w, &p), -1.0);
        let w = window_with_distances(&[3.0, f64::INFINITY], &p);
        assert_eq!(progress_velocity(&w, &p), -1.0);
        let w = window_with_distances(&[f64::INFINITY, 3.0], &p);
        assert_eq!(progress_velocity(&w, &p), 1.0);
        let w = window_with_distances(&[f64::INFINITY], &p);
        assert_eq!(progress_velocity(&w, &p), 0.0);
    }

    #[test]
    fn info_gain_examples() {
        let mk = |variance: f64, full: bool| SignalSummary {
            mean: 0.0,
            variance,
            prev_variance: 0.0,
            stability: 1.0,
            velocity: 0.0,
            info_gain: 0.0,
            fill: if full { 5 } else { 3 },
            full,
            prev_full: false,
        };
        assert!((info_gain(&mk(0.04, true), &mk(0.01, true)) - 0.03).abs() < 1e-12);
        assert_eq!(info_gain(&mk(0.02, true), &mk(0.02, true)), 0.0);
        assert!((info_gain(&mk(0.0, true), &mk(0.05, true)) + 0.05).abs() < 1e-12);
        assert_eq!(info_gain(&mk(0.04, false), &mk(0.01, true)), 0.0);
    }

    #[test]
    fn info_gain_compares_windows_w_steps_apart() {
        let p = SignalParams::default();
        // First window noisy, second window calm.
        let stream = [0.0, 1.0, 0.0, 1.0, 0.0, 0.5, 0.5, 0.5, 0.5, 0.5];
        let (_, s) = feed(&stream, &p);
        let (_, prev_var) = two_pass(&stream[..5]);
        assert!(s.prev_full);
        assert!((s.prev_variance - prev_var).abs() < 1e-12);
        assert!((s.info_gain - prev_var).abs() < 1e-12);
        // Nine samples are not enough for a previous full window.
        let (_, s9) = feed(&stream[..9], &p);
        assert!(!s9.prev_full);
        assert_eq!(s9.info_gain, 0.0);
    }

    #[test]
    fn ema_mode_measures_spread_around_smoothed_score() {
        let p = SignalParams {
            ema_alpha: Some(0.5),
            ..SignalParams::default()
        };
        let xs = [0.2, 0.4, 0.6];
        let (_, s) = feed(&xs, &p);
        // s̄ starts at 0: 0.1, 0.25, 0.425
        let ema = 0.425;
        let var = xs.iter().map(|x| (x - ema) * (x - ema)).sum::<f64>() / 3.0;
        assert!((s.mean - ema).abs() < 1e-12);
        assert!((s.variance - var).abs() < 1e-12);
    }

    #[test]
    fn reset_empties_the_window() {
        let p = SignalParams::default();
        let (mut w, _) = feed(&[0.1, 0.9, 0.3, 0.8, 0.2, 0.6], &p);
        w.reset();
        assert!(w.is_empty());
        let s = w.update(&SignalSample::new(1, 3.0, 0.4), &p);
        assert_eq!(s.fill, 1);
        assert_eq!(s.mean, 0.4);
        assert_eq!(s.variance, 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(SignalParams::default().validate().is_ok());
        let bad = SignalParams {
            window: 1,
            ..SignalParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = SignalParams {
            sigma_norm: 0.0,
            ..SignalParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = SignalParams {
            ema_alpha: Some(1.0),
            ..SignalParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
