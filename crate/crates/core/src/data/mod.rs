//! Canonical dataset representation.
//!
//! Every source is reduced to a list of single-activity [`Trial`]s sharing a
//! channel schema and sample rate. Free-execution recordings go through
//! [`standardize`] first.

mod io;
mod matrix;
mod standardize;
mod synth;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{emit_dataset, ingest_dataset, FormatTag};
pub use matrix::Matrix;
pub use standardize::{standardize, Recording};
pub use synth::{ar1_drift, generate_synthetic, SyntheticSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Accelerometer,
    Gyroscope,
    Magnetometer,
    Temperature,
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelMeta {
    pub name: String,
    pub sensor_kind: SensorKind,
    #[serde(default)]
    pub body_position: String,
}

impl ChannelMeta {
    pub fn new(name: impl Into<String>, sensor_kind: SensorKind, body_position: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            sensor_kind,
            body_position: body_position.into(),
        }
    }
}

/// One single-activity recording by one subject.
#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub trial_id: String,
    pub subject_id: String,
    pub activity_label: String,
    pub sample_rate_hz: f64,
    pub channels: Vec<ChannelMeta>,
    pub data: Matrix,
}

impl Trial {
    pub fn validate(&self) -> Result<()> {
        if self.data.cols() != self.channels.len() {
            return Err(Error::ChannelMismatch {
                trial: self.trial_id.clone(),
                expected: self.channels.len(),
                found: self.data.cols(),
            });
        }
        if self.data.rows() == 0 {
            return Err(Error::InvalidDataset(format!("trial {} is empty", self.trial_id)));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "trial {} has sample rate {}",
                self.trial_id, self.sample_rate_hz
            )));
        }
        let mut names = BTreeSet::new();
        for ch in &self.channels {
            if !names.insert(ch.name.as_str()) {
                return Err(Error::InvalidDataset(format!(
                    "trial {}: duplicate channel {}",
                    self.trial_id, ch.name
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.data.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub sample_rate_hz: f64,
    pub channels: Vec<ChannelMeta>,
    /// Sorted by `trial_id`.
    pub trials: Vec<Trial>,
    pub activity_set: BTreeSet<String>,
    pub subject_set: BTreeSet<String>,
}

impl Dataset {
    /// Validates every trial, checks the shared schema and sorts trials by id.
    ///
    /// Activity and subject sets are the union of the trial metadata plus any
    /// extra declared labels (a declared activity may have no trials).
    pub fn new(
        name: impl Into<String>,
        mut trials: Vec<Trial>,
        declared_activities: impl IntoIterator<Item = String>,
        declared_subjects: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        let first = trials
            .first()
            .ok_or_else(|| Error::InvalidDataset("dataset has no trials".into()))?;
        let sample_rate_hz = first.sample_rate_hz;
        let channels = first.channels.clone();

        let mut ids = BTreeSet::new();
        for trial in &trials {
            trial.validate()?;
            if trial.sample_rate_hz != sample_rate_hz {
                return Err(Error::SampleRateMismatch(sample_rate_hz, trial.sample_rate_hz));
            }
            if trial.channels != channels {
                return Err(Error::InvalidDataset(format!(
                    "trial {} does not share the dataset channel schema",
                    trial.trial_id
                )));
            }
            if !ids.insert(trial.trial_id.clone()) {
                return Err(Error::InvalidDataset(format!("duplicate trial id {}", trial.trial_id)));
            }
        }
        trials.sort_by(|a, b| a.trial_id.cmp(&b.trial_id));

        let mut activity_set: BTreeSet<String> = declared_activities.into_iter().collect();
        let mut subject_set: BTreeSet<String> = declared_subjects.into_iter().collect();
        for trial in &trials {
            activity_set.insert(trial.activity_label.clone());
            subject_set.insert(trial.subject_id.clone());
        }

        Ok(Self {
            name: name.into(),
            sample_rate_hz,
            channels,
            trials,
            activity_set,
            subject_set,
        })
    }

    /// Ordered class list; class indices used by the learners refer to it.
    pub fn classes(&self) -> Vec<String> {
        self.activity_set.iter().cloned().collect()
    }

    pub fn total_samples(&self) -> usize {
        self.trials.iter().map(Trial::len).sum()
    }

    /// Converts each trial back to a constant-label recording.
    pub fn to_recordings(&self) -> Vec<Recording> {
        self.trials
            .iter()
            .map(|t| Recording {
                recording_id: t.trial_id.clone(),
                subject_id: t.subject_id.clone(),
                sample_rate_hz: t.sample_rate_hz,
                channels: t.channels.clone(),
                labels: vec![t.activity_label.clone(); t.len()],
                data: t.data.clone(),
            })
            .collect()
    }
}

/// True when the largest class has at least four times the samples of the
/// smallest. A single class (or no class) counts as balanced.
pub fn is_unbalanced<K>(counts: &BTreeMap<K, usize>) -> bool {
    if counts.len() < 2 {
        return false;
    }
    let max = counts.values().copied().max().unwrap_or(0);
    let min = counts.values().copied().min().unwrap_or(0);
    max >= 4 * min
}
