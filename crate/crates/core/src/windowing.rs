//! Temporal sliding windows with provenance.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{Matrix, Trial};
use crate::error::{Error, Result};

/// Window length and overlap. 50% overlap gives semi-non-overlapping windows,
/// zero overlap gives full-non-overlapping windows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_sec: f64,
    pub overlap_frac: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self::semi_overlapping(5.0)
    }
}

impl WindowConfig {
    pub fn semi_overlapping(window_sec: f64) -> Self {
        Self {
            window_sec,
            overlap_frac: 0.5,
        }
    }

    pub fn non_overlapping(window_sec: f64) -> Self {
        Self {
            window_sec,
            overlap_frac: 0.0,
        }
    }

    /// Window length in samples, rounded half-up.
    pub fn window_len(&self, sample_rate_hz: f64) -> Result<usize> {
        self.validate()?;
        let len = (self.window_sec * sample_rate_hz + 0.5).floor();
        if len < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "{} s at {sample_rate_hz} Hz is shorter than one sample",
                self.window_sec
            )));
        }
        Ok(len as usize)
    }

    /// Step between window starts, rounded half-up with a floor of one sample.
    pub fn step(&self, window_len: usize) -> usize {
        let step = (window_len as f64 * (1.0 - self.overlap_frac) + 0.5).floor() as usize;
        step.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window_sec > 0.0 && self.window_sec.is_finite()) {
            return Err(Error::InvalidConfig("window_sec must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.overlap_frac) {
            return Err(Error::InvalidConfig("overlap_frac must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// A fixed-length slice `[start_idx, end_idx)` of one trial.
#[derive(Clone, Debug, PartialEq)]
/// Identifiers are shared with the sibling windows of the same trial.
pub struct Window {
    pub trial_id: Arc<str>,
    pub subject_id: Arc<str>,
    pub activity_label: Arc<str>,
    pub start_idx: usize,
    pub end_idx: usize,
    pub data: Matrix,
}

impl Window {
    pub fn len(&self) -> usize {
        self.end_idx - self.start_idx
    }

    pub fn is_empty(&self) -> bool {
        self.end_idx == self.start_idx
    }

    /// True when both windows come from the same trial and their sample
    /// ranges intersect.
    pub fn overlaps(&self, other: &Window) -> bool {
        self.trial_id == other.trial_id && self.start_idx < other.end_idx && other.start_idx < self.end_idx
    }
}

/// Number of windows `slide_windows` produces, in closed form.
pub fn window_count(trial_len: usize, window_len: usize, step: usize) -> usize {
    assert!(window_len >= 1 && step >= 1, "window_len and step must be >= 1");
    if trial_len < window_len {
        0
    } else {
        (trial_len - window_len) / step + 1
    }
}

/// Start indices `0, step, 2*step, ...` of every window that fits.
pub fn window_starts(trial_len: usize, window_len: usize, step: usize) -> impl Iterator<Item = usize> {
    (0..window_count(trial_len, window_len, step)).map(move |i| i * step)
}

/// Slices a trial into windows; a trailing remainder shorter than the window
/// is dropped.
pub fn slide_windows(trial: &Trial, config: &WindowConfig) -> Result<Vec<Window>> {
    let window_len = config.window_len(trial.sample_rate_hz)?;
    let step = config.step(window_len);
    Ok(slide_windows_exact(trial, window_len, step))
}

/// [`slide_windows`] with the length and step already in samples.
pub fn slide_windows_exact(trial: &Trial, window_len: usize, step: usize) -> Vec<Window> {
    let trial_id: Arc<str> = trial.trial_id.as_str().into();
    let subject_id: Arc<str> = trial.subject_id.as_str().into();
    let activity_label: Arc<str> = trial.activity_label.as_str().into();
    window_starts(trial.len(), window_len, step)
        .map(|start| Window {
            trial_id: trial_id.clone(),
            subject_id: subject_id.clone(),
            activity_label: activity_label.clone(),
            start_idx: start,
            end_idx: start + window_len,
            data: trial.data.slice_rows(start, start + window_len),
        })
        .collect()
}
