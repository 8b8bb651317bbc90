//! On-disk layout: `dataset.json` plus one CSV table per trial
//! (`trials/<trial_id>.csv`, header row of channel names). The continuous
//! variant lists `recordings` instead of `trials`; each table carries an extra
//! `label` column and is routed through [`standardize`](super::standardize).

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{standardize, ChannelMeta, Dataset, Matrix, Recording, Trial};
use crate::error::{Error, Result};

pub const METADATA_FILE: &str = "dataset.json";
const LABEL_COLUMN: &str = "label";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatTag {
    /// One single-activity table per trial.
    Canonical,
    /// Free-execution recordings with a per-step `label` column.
    Continuous,
}

impl FromStr for FormatTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "canonical" | "trials" => Ok(Self::Canonical),
            "continuous" | "recordings" => Ok(Self::Continuous),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetMeta {
    name: String,
    sample_rate_hz: f64,
    channels: Vec<ChannelMeta>,
    #[serde(default)]
    activities: Vec<String>,
    #[serde(default)]
    subjects: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    trials: Vec<TrialEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    recordings: Vec<RecordingEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrialEntry {
    trial_id: String,
    subject_id: String,
    activity_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_rate_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    file: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordingEntry {
    recording_id: String,
    subject_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sample_rate_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    file: Option<String>,
}

pub fn ingest_dataset(path: &Path, format: FormatTag) -> Result<Dataset> {
    let meta_path = path.join(METADATA_FILE);
    if !meta_path.is_file() {
        return Err(Error::MissingMetadata(meta_path));
    }
    let meta: DatasetMeta = serde_json::from_str(&fs::read_to_string(&meta_path)?)?;
    if !(meta.sample_rate_hz > 0.0 && meta.sample_rate_hz.is_finite()) {
        return Err(Error::InvalidDataset(format!(
            "sample_rate_hz must be positive, got {}",
            meta.sample_rate_hz
        )));
    }
    let check_rate = |rate: Option<f64>| match rate {
        Some(r) if r != meta.sample_rate_hz => Err(Error::SampleRateMismatch(meta.sample_rate_hz, r)),
        _ => Ok(()),
    };

    match format {
        FormatTag::Canonical => {
            let mut trials = Vec::with_capacity(meta.trials.len());
            for entry in &meta.trials {
                check_rate(entry.sample_rate_hz)?;
                check_id(&entry.trial_id)?;
                let file = entry
                    .file
                    .clone()
                    .unwrap_or_else(|| format!("trials/{}.csv", entry.trial_id));
                let (data, _) = read_table(&path.join(file), &entry.trial_id, &meta.channels, false)?;
                trials.push(Trial {
                    trial_id: entry.trial_id.clone(),
                    subject_id: entry.subject_id.clone(),
                    activity_label: entry.activity_label.clone(),
                    sample_rate_hz: meta.sample_rate_hz,
                    channels: meta.channels.clone(),
                    data,
                });
            }
            Dataset::new(meta.name, trials, meta.activities, meta.subjects)
        }
        FormatTag::Continuous => {
            let mut recordings = Vec::with_capacity(meta.recordings.len());
            for entry in &meta.recordings {
                check_rate(entry.sample_rate_hz)?;
                check_id(&entry.recording_id)?;
                let file = entry
                    .file
                    .clone()
                    .unwrap_or_else(|| format!("recordings/{}.csv", entry.recording_id));
                let (data, labels) =
                    read_table(&path.join(file), &entry.recording_id, &meta.channels, true)?;
                recordings.push(Recording {
                    recording_id: entry.recording_id.clone(),
                    subject_id: entry.subject_id.clone(),
                    sample_rate_hz: meta.sample_rate_hz,
                    channels: meta.channels.clone(),
                    labels,
                    data,
                });
            }
            let ds = standardize(&meta.name, &recordings)?;
            Dataset::new(ds.name, ds.trials, meta.activities, meta.subjects)
        }
    }
}

/// Writes the canonical layout. `ingest_dataset(emit_dataset(d))` reproduces `d`
/// exactly: values are written in shortest round-trip decimal form.
pub fn emit_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    fs::create_dir_all(path.join("trials"))?;
    let meta = DatasetMeta {
        name: dataset.name.clone(),
        sample_rate_hz: dataset.sample_rate_hz,
        channels: dataset.channels.clone(),
        activities: dataset.activity_set.iter().cloned().collect(),
        subjects: dataset.subject_set.iter().cloned().collect(),
        trials: dataset
            .trials
            .iter()
            .map(|t| TrialEntry {
                trial_id: t.trial_id.clone(),
                subject_id: t.subject_id.clone(),
                activity_label: t.activity_label.clone(),
                sample_rate_hz: None,
                file: None,
            })
            .collect(),
        recordings: Vec::new(),
    };
    fs::write(path.join(METADATA_FILE), serde_json::to_string_pretty(&meta)?)?;

    for trial in &dataset.trials {
        check_id(&trial.trial_id)?;
        let mut writer = csv::Writer::from_path(path.join("trials").join(format!("{}.csv", trial.trial_id)))?;
        writer.write_record(trial.channels.iter().map(|c| c.name.as_str()))?;
        for r in 0..trial.data.rows() {
            writer.write_record(trial.data.row(r).iter().map(|v| v.to_string()))?;
        }
        writer.flush()?;
    }
    Ok(())
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || id.contains(['/', '\\']) || id == "." || id == ".." {
        return Err(Error::InvalidDataset(format!("unusable id {id:?}")));
    }
    Ok(())
}

fn read_table(
    file: &Path,
    id: &str,
    channels: &[ChannelMeta],
    with_labels: bool,
) -> Result<(Matrix, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(file)?;
    let header = reader.headers()?.clone();

    let label_col = if with_labels {
        Some(header.iter().position(|h| h.trim() == LABEL_COLUMN).ok_or_else(|| {
            Error::InvalidDataset(format!("recording {id} has no `{LABEL_COLUMN}` column"))
        })?)
    } else {
        None
    };
    let data_cols: Vec<usize> = (0..header.len()).filter(|&c| Some(c) != label_col).collect();
    if data_cols.len() != channels.len() {
        return Err(Error::ChannelMismatch {
            trial: id.to_string(),
            expected: channels.len(),
            found: data_cols.len(),
        });
    }
    for (&col, ch) in data_cols.iter().zip(channels) {
        if header[col].trim() != ch.name {
            return Err(Error::InvalidDataset(format!(
                "{id}: column {:?} does not match channel {:?}",
                &header[col], ch.name
            )));
        }
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::ChannelMismatch {
                trial: id.to_string(),
                expected: header.len(),
                found: record.len(),
            });
        }
        for &col in &data_cols {
            let raw = record[col].trim();
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::NonNumeric {
                        trial: id.to_string(),
                        row,
                        value: raw.to_string(),
                    })
                }
            }
        }
        if let Some(col) = label_col {
            labels.push(record[col].trim().to_string());
        }
        rows += 1;
    }
    Ok((Matrix::new(rows, channels.len(), values)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SensorKind;

    fn write_meta(dir: &Path, json: &str) {
        fs::create_dir_all(dir.join("trials")).unwrap();
        fs::write(dir.join(METADATA_FILE), json).unwrap();
    }

    const META: &str = r#"{
        "name": "tiny", "sample_rate_hz": 50.0,
        "channels": [
            {"name": "ax", "sensor_kind": "accelerometer", "body_position": "chest"},
            {"name": "ay", "sensor_kind": "accelerometer", "body_position": "chest"},
            {"name": "az", "sensor_kind": "accelerometer", "body_position": "chest"},
            {"name": "gx", "sensor_kind": "gyroscope", "body_position": "chest"}
        ],
        "activities": ["walk", "sit"], "subjects": ["s1"],
        "trials": [
            {"trial_id": "t2", "subject_id": "s1", "activity_label": "sit"},
            {"trial_id": "t1", "subject_id": "s1", "activity_label": "walk"}
        ]
    }"#;

    #[test]
    fn ingests_two_trials_in_lexicographic_order() {
        let dir = tempfile::tempdir().unwrap();
        write_meta(dir.path(), META);
        fs::write(dir.path().join("trials/t1.csv"), "ax,ay,az,gx\n1,2,3,4\n5,6,7,8\n").unwrap();
        fs::write(dir.path().join("trials/t2.csv"), "ax,ay,az,gx\n0.5,0,0,1e-3\n").unwrap();
        let ds = ingest_dataset(dir.path(), FormatTag::Canonical).unwrap();
        assert_eq!(ds.trials.len(), 2);
        assert_eq!(ds.trials[0].trial_id, "t1");
        assert_eq!(ds.trials[0].data.get(1, 3), 8.0);
        assert_eq!(ds.channels[3].sensor_kind, SensorKind::Gyroscope);
    }

    #[test]
    fn three_columns_for_four_channels_is_a_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write_meta(dir.path(), META);
        fs::write(dir.path().join("trials/t1.csv"), "ax,ay,az\n1,2,3\n").unwrap();
        fs::write(dir.path().join("trials/t2.csv"), "ax,ay,az,gx\n1,2,3,4\n").unwrap();
        let err = ingest_dataset(dir.path(), FormatTag::Canonical).unwrap_err();
        assert!(matches!(err, Error::ChannelMismatch { expected: 4, found: 3, .. }), "{err}");
    }

    #[test]
    fn reports_missing_metadata_and_bad_numbers() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            ingest_dataset(dir.path(), FormatTag::Canonical),
            Err(Error::MissingMetadata(_))
        ));
        write_meta(dir.path(), META);
        fs::write(dir.path().join("trials/t1.csv"), "ax,ay,az,gx\n1,2,x,4\n").unwrap();
        fs::write(dir.path().join("trials/t2.csv"), "ax,ay,az,gx\n1,2,3,4\n").unwrap();
        assert!(matches!(
            ingest_dataset(dir.path(), FormatTag::Canonical),
            Err(Error::NonNumeric { row: 0, .. })
        ));
    }

    #[test]
    fn per_trial_rate_must_match() {
        let dir = tempfile::tempdir().unwrap();
        let meta = META.replace(
            r#""activity_label": "sit"}"#,
            r#""activity_label": "sit", "sample_rate_hz": 100.0}"#,
        );
        write_meta(dir.path(), &meta);
        fs::write(dir.path().join("trials/t1.csv"), "ax,ay,az,gx\n1,2,3,4\n").unwrap();
        fs::write(dir.path().join("trials/t2.csv"), "ax,ay,az,gx\n1,2,3,4\n").unwrap();
        assert!(matches!(
            ingest_dataset(dir.path(), FormatTag::Canonical),
            Err(Error::SampleRateMismatch(..))
        ));
    }

    #[test]
    fn continuous_layout_is_standardized() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("recordings")).unwrap();
        fs::write(
            dir.path().join(METADATA_FILE),
            r#"{"name": "free", "sample_rate_hz": 20.0,
                "channels": [{"name": "x", "sensor_kind": "accelerometer"}],
                "recordings": [{"recording_id": "r1", "subject_id": "s1"}]}"#,
        )
        .unwrap();
        fs::write(dir.path().join("recordings/r1.csv"), "x,label\n1,A\n2,A\n3,A\n4,B\n5,B\n").unwrap();
        let ds = ingest_dataset(dir.path(), FormatTag::Continuous).unwrap();
        assert_eq!(ds.trials.len(), 2);
        assert_eq!(ds.trials[0].len(), 3);
        assert_eq!(ds.trials[1].activity_label, "B");
    }
}
