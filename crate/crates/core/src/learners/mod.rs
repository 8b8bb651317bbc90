//! Classical classifiers over feature vectors: a Gini tree, multinomial
//! logistic regression, a one-hidden-layer perceptron, bagged trees and a
//! soft-voting ensemble.
//!
//! Logistic regression and the perceptron train through the network engine
//! in [`crate::neuralnet`] with the shared Adadelta rule and stopping rule.

pub mod tree;

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::neuralnet::{fit, Activation, LayerSpec, NetSpec, Network, Shape, TrainConfig};
use crate::rng::{derive_seed, rng_for, stream};
pub use tree::{DecisionTree, Node, TreeConfig};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Index of the first maximum, so ties go to the earlier class.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Per-feature mean and population standard deviation of a training fold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InsufficientData("standardizer: no rows".into()));
        };
        let d = first.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Self { mean, std })
    }

    /// Constant features are centered but not scaled.
    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { v - m })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Tree,
    Logreg,
    Mlp,
    Bagging,
    Voting,
}

/// A softmax network with its input standardizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetModel {
    pub standardizer: Standardizer,
    pub network: Network,
    pub epochs: usize,
    pub final_loss: Option<f64>,
}

impl NetModel {
    fn proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.network.predict_proba(&self.standardizer.transform(row))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelParams {
    Tree(DecisionTree),
    Logreg(NetModel),
    Mlp(NetModel),
    Bagging(Vec<DecisionTree>),
    Voting {
        mlp: NetModel,
        tree: DecisionTree,
        logreg: NetModel,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub classes: Vec<String>,
    pub schema: Vec<String>,
    pub params: ModelParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub labels: Vec<String>,
    pub posteriors: Vec<Vec<f64>>,
}

/// Hyperparameters for every learner; none are given by the methods'
/// original descriptions, so all are defaults of this crate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub opt: TrainConfig,
    pub tree: TreeConfig,
    /// Hidden units; `None` means `max(16, 2 * features)`.
    pub hidden: Option<usize>,
    pub n_trees: usize,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            opt: TrainConfig::default(),
            tree: TreeConfig::default(),
            hidden: None,
            n_trees: 10,
            seed: 0,
        }
    }
}

struct Encoded {
    classes: Vec<String>,
    y: Vec<usize>,
}

fn encode(x: &FeatureSet, labels: &[String]) -> Result<Encoded> {
    if x.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    if x.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!("{} rows, {} labels", x.len(), labels.len())));
    }
    let classes: Vec<String> = labels.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let y = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label comes from the class set"))
        .collect();
    Ok(Encoded { classes, y })
}

fn wrap(kind: ModelKind, x: &FeatureSet, classes: Vec<String>, params: ModelParams) -> TrainedModel {
    TrainedModel {
        kind,
        classes,
        schema: x.schema.clone(),
        params,
    }
}

pub fn train_tree(x: &FeatureSet, labels: &[String], cfg: &TreeConfig) -> Result<TrainedModel> {
    let e = encode(x, labels)?;
    let t = DecisionTree::fit(&x.rows, &e.y, e.classes.len(), cfg)?;
    Ok(wrap(ModelKind::Tree, x, e.classes, ModelParams::Tree(t)))
}

fn fit_net(spec_layers: Vec<LayerSpec>, name: &str, x: &FeatureSet, e: &Encoded, opt: &TrainConfig, seed: u64) -> Result<NetModel> {
    let standardizer = Standardizer::fit(&x.rows)?;
    let inputs: Vec<Vec<f64>> = x.rows.iter().map(|r| standardizer.transform(r)).collect();
    let spec = NetSpec {
        name: name.into(),
        input: Shape::Flat(x.dim()),
        layers: spec_layers,
    };
    let network = Network::new(spec, seed)?;
    let trained = fit(network, &inputs, &e.y, &opt.clone().with_seed(seed))?;
    Ok(NetModel {
        standardizer,
        epochs: trained.log.len(),
        final_loss: trained.log.last().map(|l| l.loss),
        network: trained.network,
    })
}

fn logreg_net(x: &FeatureSet, e: &Encoded, opt: &TrainConfig, seed: u64) -> Result<NetModel> {
    let layers = vec![LayerSpec::Dense { units: e.classes.len() }, LayerSpec::Softmax];
    let full_batch = TrainConfig {
        batch_size: x.len(),
        ..opt.clone()
    };
    fit_net(layers, "logreg", x, e, &full_batch, seed)
}

fn mlp_net(x: &FeatureSet, e: &Encoded, hidden: Option<usize>, opt: &TrainConfig, seed: u64) -> Result<NetModel> {
    let h = hidden.unwrap_or_else(|| 16.max(2 * x.dim()));
    if h == 0 {
        return Err(Error::InvalidConfig("mlp: zero hidden units".into()));
    }
    let layers = vec![
        LayerSpec::Dense { units: h },
        LayerSpec::Activation { kind: Activation::Tanh },
        LayerSpec::Dense { units: e.classes.len() },
        LayerSpec::Softmax,
    ];
    fit_net(layers, "mlp", x, e, opt, seed)
}

/// Multinomial logistic regression, trained full-batch.
pub fn train_logreg(x: &FeatureSet, labels: &[String], opt: &TrainConfig) -> Result<TrainedModel> {
    let e = encode(x, labels)?;
    let m = logreg_net(x, &e, opt, opt.seed)?;
    Ok(wrap(ModelKind::Logreg, x, e.classes, ModelParams::Logreg(m)))
}

pub fn train_mlp(x: &FeatureSet, labels: &[String], hidden: Option<usize>, opt: &TrainConfig) -> Result<TrainedModel> {
    let e = encode(x, labels)?;
    let m = mlp_net(x, &e, hidden, opt, opt.seed)?;
    Ok(wrap(ModelKind::Mlp, x, e.classes, ModelParams::Mlp(m)))
}

/// Trees on bootstrap resamples of size N drawn from `(seed, tree)`.
pub fn train_bagging(x: &FeatureSet, labels: &[String], n_trees: usize, cfg: &TreeConfig, seed: u64) -> Result<TrainedModel> {
    if n_trees == 0 {
        return Err(Error::InvalidConfig("bagging: zero trees".into()));
    }
    let e = encode(x, labels)?;
    let n = x.len();
    let trees = (0..n_trees)
        .map(|t| {
            let mut rng = rng_for(seed, &[stream::BOOTSTRAP, t as u64]);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let xs: Vec<Vec<f64>> = idx.iter().map(|&i| x.rows[i].clone()).collect();
            let ys: Vec<usize> = idx.iter().map(|&i| e.y[i]).collect();
            DecisionTree::fit(&xs, &ys, e.classes.len(), cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(wrap(ModelKind::Bagging, x, e.classes, ModelParams::Bagging(trees)))
}

/// Soft vote of a perceptron, a tree and logistic regression trained on the
/// same rows.
pub fn train_voting(x: &FeatureSet, labels: &[String], cfg: &LearnerConfig) -> Result<TrainedModel> {
    let e = encode(x, labels)?;
    let (nets, tree) = rayon::join(
        || {
            rayon::join(
                || mlp_net(x, &e, cfg.hidden, &cfg.opt, derive_seed(cfg.seed, &[stream::METHOD, 0])),
                || logreg_net(x, &e, &cfg.opt, derive_seed(cfg.seed, &[stream::METHOD, 1])),
            )
        },
        || DecisionTree::fit(&x.rows, &e.y, e.classes.len(), &cfg.tree),
    );
    let params = ModelParams::Voting {
        mlp: nets.0?,
        tree: tree?,
        logreg: nets.1?,
    };
    Ok(wrap(ModelKind::Voting, x, e.classes, params))
}

impl TrainedModel {
    /// Posterior over `self.classes` for one row.
    pub fn posterior(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.schema.len() {
            return Err(Error::ShapeMismatch(format!("expected {} features, got {}", self.schema.len(), row.len())));
        }
        let c = self.classes.len();
        Ok(match &self.params {
            ModelParams::Tree(t) => t.predict_proba(row).to_vec(),
            ModelParams::Logreg(m) | ModelParams::Mlp(m) => m.proba(row)?,
            ModelParams::Bagging(trees) => {
                let mut votes = vec![0.0; c];
                for t in trees {
                    votes[argmax(t.predict_proba(row))] += 1.0;
                }
                votes.iter().map(|v| v / trees.len() as f64).collect()
            }
            ModelParams::Voting { mlp, tree, logreg } => {
                let a = mlp.proba(row)?;
                let b = tree.predict_proba(row);
                let l = logreg.proba(row)?;
                (0..c).map(|i| (a[i] + b[i] + l[i]) / 3.0).collect()
            }
        })
    }

    pub fn predict(&self, x: &FeatureSet) -> Result<Prediction> {
        if x.schema != self.schema {
            return Err(Error::SchemaMismatch {
                expected: self.schema.clone(),
                found: x.schema.clone(),
            });
        }
        let posteriors = x.rows.iter().map(|r| self.posterior(r)).collect::<Result<Vec<_>>>()?;
        let labels = posteriors.iter().map(|p| self.classes[argmax(p)].clone()).collect();
        Ok(Prediction { labels, posteriors })
    }

    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        v["format_version"] = MODEL_FORMAT_VERSION.into();
        Ok(serde_json::to_string(&v)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        match v.get("format_version").and_then(|x| x.as_u64()) {
            Some(ver) if ver == u64::from(MODEL_FORMAT_VERSION) => Ok(serde_json::from_value(v)?),
            other => Err(Error::UnknownFormat(format!("model format version {other:?}"))),
        }
    }
}
