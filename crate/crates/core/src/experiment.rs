//! Experiment orchestration: build the fold plan once, run each method on
//! every fold, and aggregate.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{generate_synthetic, ingest_dataset, Dataset, FormatTag, Matrix, SyntheticSpec};
use crate::error::{Error, Result};
use crate::evaluation::{lda_project, separability_ratio, FoldResult, ResultSummary};
use crate::features::{extract_all, FeatureKind, FeatureSet};
use crate::learners::{
    argmax, train_bagging, train_mlp, train_voting, LearnerConfig, Standardizer, TrainedModel,
};
use crate::neuralnet::{
    assemble_modalities, build_chen_xue, build_ha2015, build_ha2016, build_jiang_yin, fit, modality_groups,
    signal_image, Dims, NetSpec, Network,
};
use crate::rng::{derive_seed, stream};
use crate::splitplan::{
    audit_leakage, split_fncv, split_holdout, split_ltcv, split_sncv, split_snls, split_snls_x10, Combination,
    FoldPlan, LeakageReport,
};
use crate::windowing::{Window, WindowConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Perceptron on per-channel mean and standard deviation.
    Kwapisz,
    /// Soft vote of perceptron, tree and logistic regression on mean/std.
    Catal,
    /// Bagged trees on per-channel means and pairwise correlations.
    Kim,
    ChenXue,
    JiangYin,
    Ha2015,
    Ha2016,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Self::Kwapisz,
        Self::Catal,
        Self::Kim,
        Self::ChenXue,
        Self::JiangYin,
        Self::Ha2015,
        Self::Ha2016,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Kwapisz => "kwapisz",
            Self::Catal => "catal",
            Self::Kim => "kim",
            Self::ChenXue => "chen_xue",
            Self::JiangYin => "jiang_yin",
            Self::Ha2015 => "ha2015",
            Self::Ha2016 => "ha2016",
        }
    }

    pub fn is_convnet(self) -> bool {
        !matches!(self, Self::Kwapisz | Self::Catal | Self::Kim)
    }

    pub fn feature_kind(self) -> Option<FeatureKind> {
        match self {
            Self::Kwapisz | Self::Catal => Some(FeatureKind::MeanStd),
            Self::Kim => Some(FeatureKind::MeanCorr),
            _ => None,
        }
    }

    fn code(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace(['-', '&'], "_");
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSource {
    Synthetic { spec: SyntheticSpec, seed: u64 },
    Path { path: PathBuf, format: FormatTag },
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            Self::Synthetic { spec, seed } => generate_synthetic(spec, *seed),
            Self::Path { path, format } => ingest_dataset(path, *format),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub method: Method,
    pub combination: Combination,
    pub window_sec: f64,
    pub k: usize,
    /// Seeds the fold plan and every per-fold learner.
    pub seed: u64,
    pub holdout_frac: f64,
    pub learner: LearnerConfig,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSource, method: Method, combination: Combination, seed: u64) -> Self {
        Self {
            dataset,
            method,
            combination,
            window_sec: 5.0,
            k: 10,
            seed,
            holdout_frac: 0.7,
            learner: LearnerConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        WindowConfig::semi_overlapping(self.window_sec).validate()?;
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!("k = {} (need >= 2)", self.k)));
        }
        if !(self.holdout_frac > 0.0 && self.holdout_frac < 1.0) {
            return Err(Error::InvalidConfig(format!("holdout_frac = {}", self.holdout_frac)));
        }
        self.learner.opt.validate()
    }

    /// Hash of every setting that affects the result, including defaults and
    /// the crate version.
    pub fn config_hash(&self) -> String {
        let doc = serde_json::json!({
            "crate": concat!(env!("CARGO_PKG_NAME"), "/", env!("CARGO_PKG_VERSION")),
            "config": self,
        });
        hex::encode(Sha256::digest(doc.to_string().as_bytes()))
    }
}

/// Builds the plan(s) for a combination. Only SNLSx10 yields several.
pub fn build_plans(ds: &Dataset, cfg: &ExperimentConfig) -> Result<Vec<FoldPlan>> {
    let sec = cfg.window_sec;
    Ok(match cfg.combination {
        Combination::Sncv => vec![split_sncv(ds, cfg.k, sec, cfg.seed)?],
        Combination::Fncv => vec![split_fncv(ds, cfg.k, sec, cfg.seed)?],
        Combination::Ltcv => vec![split_ltcv(ds, cfg.k, sec, cfg.seed)?],
        Combination::Snls => vec![split_snls(ds, sec)?],
        Combination::SnlsX10 => split_snls_x10(ds, sec, cfg.seed)?,
        Combination::Holdout => vec![split_holdout(ds, &WindowConfig::semi_overlapping(sec), cfg.holdout_frac, cfg.seed)?],
    })
}

pub fn plans_fingerprint(plans: &[FoldPlan]) -> String {
    if let [one] = plans {
        return one.fingerprint();
    }
    let mut h = Sha256::new();
    for p in plans {
        h.update(p.fingerprint().as_bytes());
    }
    hex::encode(h.finalize())
}

/// Audits every plan and sums the counts; per-fold entries are concatenated.
pub fn audit_plans(plans: &[FoldPlan]) -> Option<LeakageReport> {
    let mut reports = plans.iter().map(audit_leakage);
    let mut first = reports.next()?;
    for r in reports {
        first.totals += r.totals;
        first.per_fold.extend(r.per_fold);
    }
    Some(first)
}

fn window_len(ds: &Dataset, window_sec: f64) -> Result<usize> {
    WindowConfig::semi_overlapping(window_sec).window_len(ds.sample_rate_hz)
}

fn infeasible(method: Method, why: impl fmt::Display) -> Error {
    Error::Infeasible(format!("{method}: {why}"))
}

/// Network spec for a convolutional method, or `Infeasible` when the
/// dataset cannot feed it.
pub fn convnet_spec(method: Method, ds: &Dataset, window_len: usize) -> Result<NetSpec> {
    let n_classes = ds.activity_set.len();
    let n_ch = ds.channels.len();
    let built = match method {
        Method::ChenXue => build_chen_xue(Dims { h: window_len, w: n_ch, d: 1 }, n_classes),
        Method::JiangYin => {
            if n_ch < 2 {
                return Err(infeasible(method, format!("signal image needs >= 2 channels, dataset has {n_ch}")));
            }
            let cols = crate::neuralnet::channel_sequence(n_ch)?.len();
            build_jiang_yin(Dims { h: window_len, w: cols, d: 1 }, n_classes)
        }
        Method::Ha2015 | Method::Ha2016 => {
            let groups = modality_groups(&ds.channels);
            if groups.len() < 2 {
                return Err(infeasible(method, format!("needs >= 2 sensor modalities, dataset has {}", groups.len())));
            }
            if method == Method::Ha2015 {
                build_ha2015(window_len, &groups, n_classes)
            } else {
                build_ha2016(window_len, &groups, n_classes)
            }
        }
        _ => return Err(Error::InvalidConfig(format!("{method} is not a convolutional method"))),
    };
    built.map_err(|e| match e {
        Error::Infeasible(_) => e,
        other => infeasible(method, other),
    })
}

/// Structural preconditions of a method on a dataset.
pub fn check_feasible(method: Method, ds: &Dataset, window_sec: f64) -> Result<()> {
    let n_ch = ds.channels.len();
    match method {
        Method::Kwapisz | Method::Catal if n_ch >= 1 => Ok(()),
        Method::Kim if n_ch >= 2 => Ok(()),
        Method::Kwapisz | Method::Catal | Method::Kim => {
            Err(infeasible(method, format!("too few channels ({n_ch})")))
        }
        _ => convnet_spec(method, ds, window_len(ds, window_sec)?).map(|_| ()),
    }
}

/// Anything that can label a fold's test windows.
pub trait FoldClassifier: Sync {
    fn name(&self) -> String;

    /// Labels for `plan.folds[fold].test`, in order.
    fn classify(&self, plan_idx: usize, plan: &FoldPlan, fold: usize, seed: u64) -> Result<Vec<String>>;
}

/// Runs one of the built-in methods on a fixed set of plans.
pub struct MethodRunner<'a> {
    method: Method,
    dataset: &'a Dataset,
    learner: LearnerConfig,
    /// Per plan; plans sharing windows share one extraction.
    features: Vec<Arc<FeatureSet>>,
    net_spec: Option<NetSpec>,
}

impl<'a> MethodRunner<'a> {
    pub fn new(method: Method, dataset: &'a Dataset, plans: &[FoldPlan], learner: &LearnerConfig) -> Result<Self> {
        let mut features: Vec<Arc<FeatureSet>> = Vec::new();
        if let Some(kind) = method.feature_kind() {
            for (i, p) in plans.iter().enumerate() {
                let shared = (0..i).find(|&j| Arc::ptr_eq(&plans[j].windows, &p.windows));
                let fs = match shared {
                    Some(j) => features[j].clone(),
                    None => Arc::new(extract_all(kind, p.windows.iter(), &dataset.channels)?),
                };
                features.push(fs);
            }
        }
        let net_spec = match (method.is_convnet(), plans.first()) {
            (true, Some(p)) => {
                let len = p.window_config.window_len(dataset.sample_rate_hz)?;
                Some(convnet_spec(method, dataset, len)?)
            }
            _ => None,
        };
        Ok(Self {
            method,
            dataset,
            learner: learner.clone(),
            features,
            net_spec,
        })
    }

    fn classify_features(&self, fs: &FeatureSet, plan: &FoldPlan, fold: usize, seed: u64) -> Result<Vec<String>> {
        let f = &plan.folds[fold];
        let x_train = fs.subset(&f.train);
        let y_train: Vec<String> = f.train.iter().map(|&i| plan.windows[i].activity_label.to_string()).collect();
        let x_test = fs.subset(&f.test);
        let model: TrainedModel = match self.method {
            Method::Kwapisz => train_mlp(&x_train, &y_train, self.learner.hidden, &self.learner.opt.clone().with_seed(seed))?,
            Method::Catal => {
                let cfg = LearnerConfig {
                    seed,
                    ..self.learner.clone()
                };
                train_voting(&x_train, &y_train, &cfg)?
            }
            Method::Kim => train_bagging(&x_train, &y_train, self.learner.n_trees, &self.learner.tree, seed)?,
            _ => unreachable!("feature path only serves feature methods"),
        };
        Ok(model.predict(&x_test)?.labels)
    }

    fn classify_convnet(&self, spec: &NetSpec, plan: &FoldPlan, fold: usize, seed: u64) -> Result<Vec<String>> {
        let f = &plan.folds[fold];
        let classes = self.dataset.classes();
        let train: Vec<&Window> = f.train.iter().map(|&i| &plan.windows[i]).collect();
        let scaler = channel_standardizer(&train)?;
        let input = |w: &Window| self.net_input(&scaler, &w.data);
        let xs = train.par_iter().map(|w| input(w)).collect::<Result<Vec<_>>>()?;
        let ys: Vec<usize> = train
            .iter()
            .map(|w| classes.binary_search_by(|c| c.as_str().cmp(&w.activity_label)).expect("window label in dataset"))
            .collect();
        let net = Network::new(spec.clone(), seed)?;
        let trained = fit(net, &xs, &ys, &self.learner.opt.clone().with_seed(seed))?;
        f.test
            .par_iter()
            .map(|&i| {
                let p = trained.predict_proba(&input(&plan.windows[i])?)?;
                Ok(classes[argmax(&p)].clone())
            })
            .collect()
    }

    fn net_input(&self, scaler: &Standardizer, data: &Matrix) -> Result<Vec<f64>> {
        let mut m = data.clone();
        for r in 0..m.rows() {
            let row = scaler.transform(m.row(r));
            for (c, v) in row.into_iter().enumerate() {
                m.set(r, c, v);
            }
        }
        Ok(match self.method {
            Method::ChenXue => m.as_slice().to_vec(),
            Method::JiangYin => signal_image(&m)?.values,
            Method::Ha2015 | Method::Ha2016 => assemble_modalities(&m, &modality_groups(&self.dataset.channels)),
            _ => unreachable!("convnet path only serves convnets"),
        })
    }
}

/// Per-channel moments over every time step of the training windows.
fn channel_standardizer(train: &[&Window]) -> Result<Standardizer> {
    let rows: Vec<Vec<f64>> = train
        .iter()
        .flat_map(|w| (0..w.data.rows()).map(|r| w.data.row(r).to_vec()))
        .collect();
    Standardizer::fit(&rows)
}

impl FoldClassifier for MethodRunner<'_> {
    fn name(&self) -> String {
        self.method.to_string()
    }

    fn classify(&self, plan_idx: usize, plan: &FoldPlan, fold: usize, seed: u64) -> Result<Vec<String>> {
        let seed = derive_seed(seed, &[stream::METHOD, self.method.code()]);
        match (&self.net_spec, self.features.get(plan_idx)) {
            (Some(spec), _) => self.classify_convnet(spec, plan, fold, seed),
            (None, Some(fs)) => self.classify_features(fs, plan, fold, seed),
            (None, None) => Err(Error::InvalidConfig(format!("no prepared features for plan {plan_idx}"))),
        }
    }
}

/// Evaluates a classifier on every fold of every plan. Repeated plans report
/// their index as the fold's repetition.
pub fn evaluate_plans(
    ds: &Dataset,
    plans: &[FoldPlan],
    classifier: &dyn FoldClassifier,
    combination: Combination,
    seed: u64,
) -> Result<ResultSummary> {
    let classes = ds.classes();
    let tasks: Vec<(usize, usize)> = plans
        .iter()
        .enumerate()
        .flat_map(|(p, plan)| (0..plan.folds.len()).map(move |f| (p, f)))
        .collect();
    let folds = tasks
        .par_iter()
        .map(|&(p, f)| {
            let plan = &plans[p];
            let fold_seed = derive_seed(seed, &[p as u64, f as u64]);
            let pred = classifier.classify(p, plan, f, fold_seed)?;
            let truth: Vec<String> = plan.test_windows(f).map(|w| w.activity_label.to_string()).collect();
            let rep = if plans.len() > 1 { p } else { 0 };
            FoldResult::from_labels(f, rep, &pred, &truth, &classes)
        })
        .collect::<Result<Vec<_>>>()?;
    ResultSummary::from_folds(&classifier.name(), &ds.name, combination.as_str(), folds)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RowOutcome {
    Completed { summary: ResultSummary },
    Infeasible { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub dataset: String,
    pub combination: Combination,
    pub outcome: RowOutcome,
    pub leakage: Option<LeakageReport>,
    pub plan_fingerprint: String,
    pub config_hash: String,
    /// Not part of the reproducible content.
    pub wall_ms: f64,
}

impl ResultRow {
    pub fn summary(&self) -> Option<&ResultSummary> {
        match &self.outcome {
            RowOutcome::Completed { summary } => Some(summary),
            RowOutcome::Infeasible { .. } => None,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self.outcome, RowOutcome::Infeasible { .. })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn all_infeasible(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(ResultRow::is_infeasible)
    }
}

/// Runs several methods on one dataset and combination. The plan is built
/// once, so every method sees identical folds.
pub fn run_batch(ds: &Dataset, methods: &[Method], cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let plans = build_plans(ds, cfg)?;
    let fingerprint = plans_fingerprint(&plans);
    let leakage = audit_plans(&plans);
    let mut rows = Vec::with_capacity(methods.len());
    for &method in methods {
        let started = Instant::now();
        let cfg_m = ExperimentConfig {
            method,
            ..cfg.clone()
        };
        let outcome = match check_feasible(method, ds, cfg.window_sec) {
            Err(Error::Infeasible(reason)) => RowOutcome::Infeasible { reason },
            Err(e) => return Err(e),
            Ok(()) => {
                let runner = MethodRunner::new(method, ds, &plans, &cfg.learner)?;
                let summary = evaluate_plans(ds, &plans, &runner, cfg.combination, cfg.seed)?;
                RowOutcome::Completed { summary }
            }
        };
        rows.push(ResultRow {
            method,
            dataset: ds.name.clone(),
            combination: cfg.combination,
            outcome,
            leakage: leakage.clone(),
            plan_fingerprint: fingerprint.clone(),
            config_hash: cfg_m.config_hash(),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(ResultTable { rows })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultRow> {
    let ds = cfg.dataset.load()?;
    let mut table = run_batch(&ds, &[cfg.method], cfg)?;
    Ok(table.rows.remove(0))
}

/// Class separability of each training fold: fit LDA on the fold's
/// features and take the between/within variance ratio of the projected
/// training windows along the first component.
pub fn lda_train_separability(ds: &Dataset, plan: &FoldPlan, kind: FeatureKind) -> Result<Vec<f64>> {
    let fs = extract_all(kind, plan.windows.iter(), &ds.channels)?;
    let classes = ds.classes();
    let y: Vec<usize> = plan
        .windows
        .iter()
        .map(|w| classes.binary_search_by(|c| c.as_str().cmp(&w.activity_label)).expect("window label in dataset"))
        .collect();
    (0..plan.folds.len())
        .into_par_iter()
        .map(|f| {
            let fold = &plan.folds[f];
            let train: Vec<Vec<f64>> = fold.train.iter().map(|&i| fs.rows[i].clone()).collect();
            let y_train: Vec<usize> = fold.train.iter().map(|&i| y[i]).collect();
            let lda = lda_project(&train, &y_train, 1)?;
            let scores: Vec<f64> = lda.projected.iter().map(|p| p[0]).collect();
            Ok(separability_ratio(&scores, &y_train))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaPoint {
    pub window: usize,
    pub split: String,
    pub label: String,
    pub c1: f64,
    pub c2: Option<f64>,
}

/// Two-component LDA of one fold, fitted on its training windows; both
/// sides are projected.
pub fn lda_points(ds: &Dataset, plan: &FoldPlan, fold: usize, kind: FeatureKind) -> Result<Vec<LdaPoint>> {
    let f = plan
        .folds
        .get(fold)
        .ok_or_else(|| Error::InvalidConfig(format!("fold {fold} out of range ({} folds)", plan.folds.len())))?;
    let fs = extract_all(kind, plan.windows.iter(), &ds.channels)?;
    let classes = ds.classes();
    let label_idx = |i: usize| classes.binary_search_by(|c| c.as_str().cmp(&plan.windows[i].activity_label)).expect("window label in dataset");
    let train: Vec<Vec<f64>> = f.train.iter().map(|&i| fs.rows[i].clone()).collect();
    let y: Vec<usize> = f.train.iter().map(|&i| label_idx(i)).collect();
    let lda = lda_project(&train, &y, 2)?;
    let point = |i: usize, split: &str| {
        let p = lda.project(&fs.rows[i]);
        LdaPoint {
            window: i,
            split: split.into(),
            label: plan.windows[i].activity_label.to_string(),
            c1: p[0],
            c2: p.get(1).copied(),
        }
    };
    Ok(f.train
        .iter()
        .map(|&i| point(i, "train"))
        .chain(f.test.iter().map(|&i| point(i, "test")))
        .collect())
}
