//! Train/test fold plans for every sample-generation process and validation
//! protocol combination, plus the leakage audit.
//!
//! | tag     | windows      | folds over              |
//! |---------|--------------|-------------------------|
//! | SNCV    | 50% overlap  | windows, k-fold         |
//! | FNCV    | no overlap   | windows, k-fold         |
//! | LTCV    | 50% overlap  | trials, k-fold          |
//! | SNLS    | 50% overlap  | subjects, one fold each |
//! | SNLSx10 | 50% overlap  | subjects, 80% of train  |
//! | HOLDOUT | configurable | windows, one split      |

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{rng_for, stream};
use crate::windowing::{slide_windows, Window, WindowConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Combination {
    #[serde(rename = "SNCV")]
    Sncv,
    #[serde(rename = "FNCV")]
    Fncv,
    #[serde(rename = "LTCV")]
    Ltcv,
    #[serde(rename = "SNLS")]
    Snls,
    #[serde(rename = "SNLSx10")]
    SnlsX10,
    #[serde(rename = "HOLDOUT")]
    Holdout,
}

impl Combination {
    pub const ALL: [Combination; 6] = [
        Self::Sncv,
        Self::Fncv,
        Self::Ltcv,
        Self::Snls,
        Self::SnlsX10,
        Self::Holdout,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sncv => "SNCV",
            Self::Fncv => "FNCV",
            Self::Ltcv => "LTCV",
            Self::Snls => "SNLS",
            Self::SnlsX10 => "SNLSx10",
            Self::Holdout => "HOLDOUT",
        }
    }

    fn code(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Combination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown combination {s:?}")))
    }
}

/// Indices into [`FoldPlan::windows`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct FoldPlan {
    pub combination: Combination,
    pub window_config: WindowConfig,
    /// Every window of the plan, ordered by `(trial_id, start_idx)`.
    pub windows: Arc<Vec<Window>>,
    pub folds: Vec<Fold>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn train_windows(&self, fold: usize) -> impl Iterator<Item = &Window> {
        self.folds[fold].train.iter().map(|&i| &self.windows[i])
    }

    pub fn test_windows(&self, fold: usize) -> impl Iterator<Item = &Window> {
        self.folds[fold].test.iter().map(|&i| &self.windows[i])
    }

    /// SHA-256 over the fold memberships, keyed by window provenance.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.combination.as_str());
        for (f, fold) in self.folds.iter().enumerate() {
            for (side, idx) in [("train", &fold.train), ("test", &fold.test)] {
                hasher.update(format!("|{f}:{side}"));
                for &i in idx {
                    let w = &self.windows[i];
                    hasher.update(format!(",{}@{}", w.trial_id, w.start_idx));
                }
            }
        }
        hex::encode(hasher.finalize())
    }

    /// Checks train/test disjointness per fold and, for cross-validation
    /// plans, that every window is tested exactly once.
    pub fn validate(&self) -> Result<()> {
        let n = self.windows.len();
        let mut tested = vec![0usize; n];
        for (f, fold) in self.folds.iter().enumerate() {
            let mut side = vec![0u8; n];
            for &i in &fold.train {
                side[i] |= 1;
            }
            for &i in &fold.test {
                if side[i] & 1 == 1 {
                    return Err(Error::InvalidDataset(format!("fold {f}: window {i} in train and test")));
                }
                tested[i] += 1;
            }
        }
        if matches!(self.combination, Combination::Sncv | Combination::Fncv | Combination::Ltcv) {
            if let Some(i) = tested.iter().position(|&c| c != 1) {
                return Err(Error::InvalidDataset(format!("window {i} tested {} times", tested[i])));
            }
        }
        Ok(())
    }
}

/// All windows of a dataset in `(trial_id, start_idx)` order.
pub fn window_dataset(dataset: &Dataset, config: &WindowConfig) -> Result<Vec<Window>> {
    let mut out = Vec::new();
    for trial in &dataset.trials {
        out.extend(slide_windows(trial, config)?);
    }
    Ok(out)
}

/// Per-class shuffle, then round-robin dealing into `k` folds. The dealing
/// position carries over between classes so fold sizes differ by at most one.
fn stratified_folds(labels: &[&str], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for members in by_class.values_mut() {
        members.shuffle(rng);
        for &i in members.iter() {
            assignment[i] = next % k;
            next += 1;
        }
    }
    assignment
}

fn folds_from_assignment(window_fold: &[usize], k: usize) -> Vec<Fold> {
    (0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..window_fold.len()).partition(|&i| window_fold[i] == f);
            Fold { train, test }
        })
        .collect()
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    Ok(())
}

fn window_cv(dataset: &Dataset, k: usize, config: WindowConfig, seed: u64, tag: Combination) -> Result<FoldPlan> {
    check_k(k)?;
    let windows = window_dataset(dataset, &config)?;
    if windows.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} windows for {k} folds",
            windows.len()
        )));
    }
    let labels: Vec<&str> = windows.iter().map(|w| &*w.activity_label).collect();
    let mut rng = rng_for(seed, &[stream::FOLDS, tag.code()]);
    let assignment = stratified_folds(&labels, k, &mut rng);
    let folds = folds_from_assignment(&assignment, k);
    Ok(FoldPlan {
        combination: tag,
        window_config: config,
        windows: Arc::new(windows),
        folds,
        seed,
    })
}

/// 50%-overlap windows, stratified k-fold over windows.
pub fn split_sncv(dataset: &Dataset, k: usize, window_sec: f64, seed: u64) -> Result<FoldPlan> {
    window_cv(dataset, k, WindowConfig::semi_overlapping(window_sec), seed, Combination::Sncv)
}

/// Non-overlapping windows, stratified k-fold over windows.
pub fn split_fncv(dataset: &Dataset, k: usize, window_sec: f64, seed: u64) -> Result<FoldPlan> {
    window_cv(dataset, k, WindowConfig::non_overlapping(window_sec), seed, Combination::Fncv)
}

/// Leave-one-trial-out: trials are folded first (stratified by trial label),
/// then windowed with 50% overlap; each window inherits its trial's fold.
pub fn split_ltcv(dataset: &Dataset, k: usize, window_sec: f64, seed: u64) -> Result<FoldPlan> {
    check_k(k)?;
    if dataset.trials.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} trials for {k} folds",
            dataset.trials.len()
        )));
    }
    let config = WindowConfig::semi_overlapping(window_sec);
    let labels: Vec<&str> = dataset.trials.iter().map(|t| t.activity_label.as_str()).collect();
    let mut rng = rng_for(seed, &[stream::FOLDS, Combination::Ltcv.code()]);
    let trial_fold = stratified_folds(&labels, k, &mut rng);

    let mut windows = Vec::new();
    let mut window_fold = Vec::new();
    for (trial, &fold) in dataset.trials.iter().zip(&trial_fold) {
        let ws = slide_windows(trial, &config)?;
        window_fold.extend(std::iter::repeat_n(fold, ws.len()));
        windows.extend(ws);
    }
    let folds = folds_from_assignment(&window_fold, k);
    if let Some(f) = folds.iter().position(|f| f.test.is_empty() || f.train.is_empty()) {
        return Err(Error::InsufficientData(format!("LTCV fold {f} has an empty side")));
    }
    Ok(FoldPlan {
        combination: Combination::Ltcv,
        window_config: config,
        windows: Arc::new(windows),
        folds,
        seed,
    })
}

/// Leave-one-subject-out with 50%-overlap windows; fold order follows the
/// sorted subject ids. No randomness.
pub fn split_snls(dataset: &Dataset, window_sec: f64) -> Result<FoldPlan> {
    if dataset.subject_set.len() < 2 {
        return Err(Error::InsufficientData("leave-one-subject-out needs >= 2 subjects".into()));
    }
    let config = WindowConfig::semi_overlapping(window_sec);
    let windows = window_dataset(dataset, &config)?;
    let subject_index: HashMap<&str, usize> = dataset
        .subject_set
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let assignment: Vec<usize> = windows.iter().map(|w| subject_index[&*w.subject_id]).collect();
    let folds = folds_from_assignment(&assignment, dataset.subject_set.len());
    for (fold, subject) in folds.iter().zip(&dataset.subject_set) {
        if fold.test.is_empty() {
            return Err(Error::InsufficientData(format!("subject {subject} has no windows")));
        }
        if fold.train.is_empty() {
            return Err(Error::InsufficientData(format!("fold for subject {subject} has no training windows")));
        }
    }
    Ok(FoldPlan {
        combination: Combination::Snls,
        window_config: config,
        windows: Arc::new(windows),
        folds,
        seed: 0,
    })
}

/// Repeated leave-one-subject-out: each repetition keeps the test sets and
/// trains on a uniform `train_frac` subsample (without replacement) of every
/// fold's training windows.
pub fn split_snls_repeated(
    dataset: &Dataset,
    window_sec: f64,
    seed: u64,
    repetitions: usize,
    train_frac: f64,
) -> Result<Vec<FoldPlan>> {
    if !(train_frac > 0.0 && train_frac <= 1.0) {
        return Err(Error::InvalidConfig(format!("train_frac {train_frac} outside (0, 1]")));
    }
    let base = split_snls(dataset, window_sec)?;
    Ok((0..repetitions)
        .map(|r| {
            let folds = base
                .folds
                .iter()
                .enumerate()
                .map(|(f, fold)| {
                    let n = fold.train.len();
                    let keep = ((n as f64 * train_frac + 0.5).floor() as usize).clamp(1, n);
                    let mut rng = rng_for(seed, &[stream::SUBSAMPLE, r as u64, f as u64]);
                    let mut picked: Vec<usize> = index::sample(&mut rng, n, keep)
                        .into_iter()
                        .map(|i| fold.train[i])
                        .collect();
                    picked.sort_unstable();
                    Fold {
                        train: picked,
                        test: fold.test.clone(),
                    }
                })
                .collect();
            FoldPlan {
                combination: Combination::SnlsX10,
                window_config: base.window_config,
                windows: Arc::clone(&base.windows),
                folds,
                seed,
            }
        })
        .collect())
}

/// Ten repetitions, each training on 80% of every fold's training windows.
pub fn split_snls_x10(dataset: &Dataset, window_sec: f64, seed: u64) -> Result<Vec<FoldPlan>> {
    split_snls_repeated(dataset, window_sec, seed, 10, 0.8)
}

/// One stratified random train/test split of the windows.
pub fn split_holdout(dataset: &Dataset, config: &WindowConfig, train_frac: f64, seed: u64) -> Result<FoldPlan> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::InvalidConfig(format!("train_frac {train_frac} outside (0, 1)")));
    }
    let windows = window_dataset(dataset, config)?;
    let n = windows.len();
    let n_train = (n as f64 * train_frac + 0.5).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InsufficientData(format!(
            "holdout of {n} windows at {train_frac} leaves an empty side"
        )));
    }

    // Stratified order: each class is shuffled, then items are interleaved by
    // their fractional rank within the class.
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, w) in windows.iter().enumerate() {
        by_class.entry(&*w.activity_label).or_default().push(i);
    }
    let mut rng = rng_for(seed, &[stream::FOLDS, Combination::Holdout.code()]);
    let mut keyed = Vec::with_capacity(n);
    for (c, members) in by_class.values_mut().enumerate() {
        members.shuffle(&mut rng);
        let len = members.len() as f64;
        for (rank, &i) in members.iter().enumerate() {
            keyed.push(((rank as f64 + 0.5) / len, c, i));
        }
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut train: Vec<usize> = keyed[..n_train].iter().map(|k| k.2).collect();
    let mut test: Vec<usize> = keyed[n_train..].iter().map(|k| k.2).collect();
    train.sort_unstable();
    test.sort_unstable();

    Ok(FoldPlan {
        combination: Combination::Holdout,
        window_config: *config,
        windows: Arc::new(windows),
        folds: vec![Fold { train, test }],
        seed,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    /// Same trial and intersecting sample ranges.
    pub overlap_pairs: u64,
    pub same_trial_pairs: u64,
    pub same_subject_pairs: u64,
}

impl std::ops::AddAssign for PairCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.overlap_pairs += rhs.overlap_pairs;
        self.same_trial_pairs += rhs.same_trial_pairs;
        self.same_subject_pairs += rhs.same_subject_pairs;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub combination: Combination,
    pub totals: PairCounts,
    pub per_fold: Vec<PairCounts>,
}

impl LeakageReport {
    pub fn overlap_pairs(&self) -> u64 {
        self.totals.overlap_pairs
    }

    pub fn same_trial_pairs(&self) -> u64 {
        self.totals.same_trial_pairs
    }

    pub fn same_subject_pairs(&self) -> u64 {
        self.totals.same_subject_pairs
    }

    /// Flat key/value document: the totals plus `fold_<i>_<counter>` keys.
    pub fn to_flat_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        map.insert("combination".into(), self.combination.as_str().into());
        map.insert("folds".into(), self.per_fold.len().into());
        map.insert("overlap_pairs".into(), self.totals.overlap_pairs.into());
        map.insert("same_trial_pairs".into(), self.totals.same_trial_pairs.into());
        map.insert("same_subject_pairs".into(), self.totals.same_subject_pairs.into());
        for (i, c) in self.per_fold.iter().enumerate() {
            map.insert(format!("fold_{i}_overlap_pairs"), c.overlap_pairs.into());
            map.insert(format!("fold_{i}_same_trial_pairs"), c.same_trial_pairs.into());
            map.insert(format!("fold_{i}_same_subject_pairs"), c.same_subject_pairs.into());
        }
        serde_json::Value::Object(map)
    }
}

/// Exact pair counts from a scan over every (train, test) pair of every fold.
pub fn audit_leakage(plan: &FoldPlan) -> LeakageReport {
    let mut trial_ids: HashMap<&str, u32> = HashMap::new();
    let mut subject_ids: HashMap<&str, u32> = HashMap::new();
    let keys: Vec<(u32, u32, usize, usize)> = plan
        .windows
        .iter()
        .map(|w| {
            let n = trial_ids.len() as u32;
            let t = *trial_ids.entry(&*w.trial_id).or_insert(n);
            let n = subject_ids.len() as u32;
            let s = *subject_ids.entry(&*w.subject_id).or_insert(n);
            (t, s, w.start_idx, w.end_idx)
        })
        .collect();

    let per_fold: Vec<PairCounts> = plan
        .folds
        .par_iter()
        .map(|fold| {
            let mut c = PairCounts::default();
            for &i in &fold.train {
                let (ti, si, a0, a1) = keys[i];
                for &j in &fold.test {
                    let (tj, sj, b0, b1) = keys[j];
                    if si == sj {
                        c.same_subject_pairs += 1;
                        if ti == tj {
                            c.same_trial_pairs += 1;
                            if a0 < b1 && b0 < a1 {
                                c.overlap_pairs += 1;
                            }
                        }
                    }
                }
            }
            c
        })
        .collect();

    let mut totals = PairCounts::default();
    for c in &per_fold {
        totals += *c;
    }
    LeakageReport {
        combination: plan.combination,
        totals,
        per_fold,
    }
}
