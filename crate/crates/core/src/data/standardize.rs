use super::{ChannelMeta, Dataset, Matrix, Trial};
use crate::error::{Error, Result};

/// A continuous recording with one activity label per time step.
#[derive(Clone, Debug, PartialEq)]
pub struct Recording {
    pub recording_id: String,
    pub subject_id: String,
    pub sample_rate_hz: f64,
    pub channels: Vec<ChannelMeta>,
    /// One label per row of `data`; an empty string marks an unlabeled step.
    pub labels: Vec<String>,
    pub data: Matrix,
}

/// Splits every recording at each label change into maximal constant-label
/// segments, one [`Trial`] per segment.
///
/// A recording that is a single segment keeps its id as the trial id, so
/// standardizing an already standardized dataset is the identity. Multi-segment
/// recordings get `<recording_id>-s<index>` ids in segment order.
pub fn standardize(name: &str, recordings: &[Recording]) -> Result<Dataset> {
    let mut trials = Vec::new();
    for rec in recordings {
        if rec.data.rows() == 0 {
            return Err(Error::InvalidDataset(format!("recording {} is empty", rec.recording_id)));
        }
        if rec.labels.len() != rec.data.rows() {
            return Err(Error::InvalidDataset(format!(
                "recording {} has {} labels for {} steps",
                rec.recording_id,
                rec.labels.len(),
                rec.data.rows()
            )));
        }
        if let Some(step) = rec.labels.iter().position(|l| l.is_empty()) {
            return Err(Error::InvalidDataset(format!(
                "recording {}: step {step} is unlabeled",
                rec.recording_id
            )));
        }

        let segments = segment_bounds(&rec.labels);
        let single = segments.len() == 1;
        for (idx, (start, end)) in segments.into_iter().enumerate() {
            let trial_id = if single {
                rec.recording_id.clone()
            } else {
                format!("{}-s{idx:04}", rec.recording_id)
            };
            trials.push(Trial {
                trial_id,
                subject_id: rec.subject_id.clone(),
                activity_label: rec.labels[start].clone(),
                sample_rate_hz: rec.sample_rate_hz,
                channels: rec.channels.clone(),
                data: rec.data.slice_rows(start, end),
            });
        }
    }
    Dataset::new(name, trials, [], [])
}

/// Half-open `[start, end)` ranges of maximal constant-label runs.
fn segment_bounds(labels: &[String]) -> Vec<(usize, usize)> {
    let mut bounds = Vec::new();
    let mut start = 0;
    for i in 1..=labels.len() {
        if i == labels.len() || labels[i] != labels[start] {
            bounds.push((start, i));
            start = i;
        }
    }
    bounds
}
