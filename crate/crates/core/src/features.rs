//! Handcrafted window descriptors.
//!
//! No normalization happens here; learners that need standardized inputs fit
//! their own statistics on the training fold.

use serde::{Deserialize, Serialize};

use crate::data::{ChannelMeta, Matrix};
use crate::error::{Error, Result};
use crate::windowing::Window;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema: Vec<String>,
}

/// A batch of feature rows sharing one schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub schema: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureSet {
    pub fn new(schema: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(bad) = rows.iter().position(|r| r.len() != schema.len()) {
            return Err(Error::ShapeMismatch(format!(
                "row {bad} has {} values for a {}-feature schema",
                rows[bad].len(),
                schema.len()
            )));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite feature value".into()));
        }
        Ok(Self { schema, rows })
    }

    /// Unnamed columns `f0, f1, ...`; handy for tests and raw matrices.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        Self::new((0..d).map(|i| format!("f{i}")).collect(), rows)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.schema.len()
    }

    pub fn subset(&self, idx: &[usize]) -> FeatureSet {
        FeatureSet {
            schema: self.schema.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    MeanStd,
    MeanCorr,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

/// Per channel: mean and population standard deviation.
pub fn features_mean_std(data: &Matrix, channels: &[ChannelMeta]) -> Result<FeatureVector> {
    check(data, channels, 1)?;
    let mut values = Vec::with_capacity(2 * channels.len());
    let mut schema = Vec::with_capacity(2 * channels.len());
    for (c, ch) in channels.iter().enumerate() {
        let m = mean(data.column(c));
        let var = mean(data.column(c).map(|x| (x - m) * (x - m)));
        values.push(m);
        values.push(var.sqrt());
        schema.push(format!("{}_mean", ch.name));
        schema.push(format!("{}_std", ch.name));
    }
    Ok(FeatureVector { values, schema })
}

/// Per-channel means followed by the Pearson correlation of every unordered
/// channel pair in upper-triangle order. A pair involving a constant channel
/// has correlation 0.
pub fn features_mean_corr(data: &Matrix, channels: &[ChannelMeta]) -> Result<FeatureVector> {
    check(data, channels, 2)?;
    let nc = channels.len();
    let means: Vec<f64> = (0..nc).map(|c| mean(data.column(c))).collect();
    let centered: Vec<Vec<f64>> = (0..nc)
        .map(|c| data.column(c).map(|x| x - means[c]).collect())
        .collect();
    let norms: Vec<f64> = centered.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();

    let mut values = means.clone();
    let mut schema: Vec<String> = channels.iter().map(|c| format!("{}_mean", c.name)).collect();
    for i in 0..nc {
        for j in i + 1..nc {
            let denom = norms[i] * norms[j];
            let r = if denom > 0.0 {
                let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                (dot / denom).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            values.push(r);
            schema.push(format!("corr_{}_{}", channels[i].name, channels[j].name));
        }
    }
    Ok(FeatureVector { values, schema })
}

fn check(data: &Matrix, channels: &[ChannelMeta], min_channels: usize) -> Result<()> {
    if data.rows() == 0 {
        return Err(Error::InsufficientData("empty window".into()));
    }
    if data.cols() != channels.len() {
        return Err(Error::ChannelMismatch {
            trial: "window".into(),
            expected: channels.len(),
            found: data.cols(),
        });
    }
    if channels.len() < min_channels {
        return Err(Error::Infeasible(format!("feature set needs >= {min_channels} channels")));
    }
    Ok(())
}

pub fn extract(kind: FeatureKind, data: &Matrix, channels: &[ChannelMeta]) -> Result<FeatureVector> {
    match kind {
        FeatureKind::MeanStd => features_mean_std(data, channels),
        FeatureKind::MeanCorr => features_mean_corr(data, channels),
    }
}

pub fn extract_all<'a>(
    kind: FeatureKind,
    windows: impl IntoIterator<Item = &'a Window>,
    channels: &[ChannelMeta],
) -> Result<FeatureSet> {
    let mut schema = None;
    let mut rows = Vec::new();
    for w in windows {
        let fv = extract(kind, &w.data, channels)?;
        schema.get_or_insert(fv.schema);
        rows.push(fv.values);
    }
    let schema = match schema {
        Some(s) => s,
        None => extract(kind, &Matrix::zeros(1, channels.len()), channels)?.schema,
    };
    FeatureSet::new(schema, rows)
}
