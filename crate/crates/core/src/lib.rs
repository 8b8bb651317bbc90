//! Bias-aware evaluation harness for activity recognition on wearable-sensor
//! time series.
//!
//! The crate covers the whole pipeline: canonical datasets and a synthetic
//! generator ([`data`]), sliding windows ([`windowing`]), fold plans for each
//! sample-generation/validation combination with a leakage audit
//! ([`splitplan`]), handcrafted features ([`features`]), classical learners
//! ([`learners`]), a small convolutional engine ([`neuralnet`]), metrics and
//! statistics ([`evaluation`]), and experiment orchestration ([`experiment`],
//! [`report`]).

pub mod data;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod features;
pub mod learners;
pub mod neuralnet;
pub mod report;
pub mod rng;
pub mod splitplan;
pub mod windowing;

pub use data::{ChannelMeta, Dataset, Matrix, SensorKind, SyntheticSpec, Trial};
pub use error::{Error, Result};
pub use evaluation::{EquivalenceVerdict, FoldResult, ResultSummary, Verdict};
pub use experiment::{ExperimentConfig, Method, ResultRow, ResultTable};
pub use features::{FeatureKind, FeatureSet, FeatureVector};
pub use learners::TrainedModel;
pub use splitplan::{Combination, FoldPlan, LeakageReport};
pub use windowing::{Window, WindowConfig};
