//! Metrics, confidence intervals, equivalence testing and LDA.

pub mod lda;
pub mod metrics;
pub mod stats;

use serde::{Deserialize, Serialize};

use crate::error::Result;
pub use lda::{lda_project, separability_ratio, Lda};
pub use metrics::{accuracy, accuracy_from_confusion, confusion, macro_f_from_confusion, macro_f_measure};
pub use stats::{
    confidence_interval, mean, sample_variance, t_quantile, unpaired_ttest, EquivalenceVerdict, Verdict,
    DISPLAY_LEVEL, EQUIVALENCE_LEVEL,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold_id: usize,
    /// Repetition index for repeated plans, 0 otherwise.
    pub repetition: usize,
    pub accuracy: f64,
    pub macro_f: f64,
    pub confusion: Vec<Vec<u64>>,
}

impl FoldResult {
    pub fn from_labels(fold_id: usize, repetition: usize, pred: &[String], truth: &[String], classes: &[String]) -> Result<Self> {
        let confusion = confusion(pred, truth, classes)?;
        Ok(Self {
            fold_id,
            repetition,
            accuracy: accuracy_from_confusion(&confusion),
            macro_f: macro_f_from_confusion(&confusion),
            confusion,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub method: String,
    pub dataset: String,
    pub combination: String,
    pub folds: Vec<FoldResult>,
    /// The values the interval is computed over: fold accuracies, or
    /// repetition means for repeated plans.
    pub samples: Vec<f64>,
    pub mean_accuracy: f64,
    pub mean_macro_f: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl ResultSummary {
    /// Aggregates folds. With several repetitions, each repetition's mean
    /// accuracy becomes one sample.
    pub fn from_folds(method: &str, dataset: &str, combination: &str, folds: Vec<FoldResult>) -> Result<Self> {
        let reps = folds.iter().map(|f| f.repetition).max().map_or(0, |r| r + 1);
        let samples: Vec<f64> = if reps > 1 {
            (0..reps)
                .map(|r| {
                    let acc: Vec<f64> = folds.iter().filter(|f| f.repetition == r).map(|f| f.accuracy).collect();
                    mean(&acc)
                })
                .collect()
        } else {
            folds.iter().map(|f| f.accuracy).collect()
        };
        // A single sample (one holdout fold) has no interval; report zero width.
        let (ci_low, ci_high) = match samples.as_slice() {
            [] => return Err(crate::error::Error::InsufficientData("no folds to summarize".into())),
            [only] => (*only, *only),
            _ => confidence_interval(&samples, DISPLAY_LEVEL)?,
        };
        let mf: Vec<f64> = folds.iter().map(|f| f.macro_f).collect();
        Ok(Self {
            method: method.into(),
            dataset: dataset.into(),
            combination: combination.into(),
            mean_accuracy: mean(&samples),
            mean_macro_f: mean(&mf),
            ci_low,
            ci_high,
            samples,
            folds,
        })
    }

    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}
