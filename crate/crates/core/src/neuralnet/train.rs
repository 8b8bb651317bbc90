//! Mini-batch training with Adadelta and gradient checking.

use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::net::Network;
use super::optim::{adadelta_step, AdadeltaState};
use crate::error::{Error, Result};
use crate::rng::{rng_for, stream};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Training stops after the first epoch whose mean loss is at or below this.
    pub stop_loss: f64,
    pub batch_size: usize,
    pub rho: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 200,
            stop_loss: 0.2,
            batch_size: 1000,
            rho: 0.95,
            eps: 1e-6,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Smaller batches for memory-heavy datasets.
    pub fn large_dataset() -> Self {
        Self {
            batch_size: 250,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidConfig("rho must lie in [0, 1)".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidConfig("eps must be positive".into()));
        }
        if self.stop_loss.is_nan() {
            return Err(Error::InvalidConfig("stop_loss is NaN".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedNet {
    pub network: Network,
    pub log: Vec<EpochLog>,
}

impl TrainedNet {
    /// One JSON object per line: `{"epoch":..,"loss":..,"wall_ms":..}`.
    pub fn log_json_lines(&self) -> String {
        self.log
            .iter()
            .map(|e| serde_json::to_string(e).expect("plain struct serializes"))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn predict_proba(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.network.predict_proba(input)
    }
}

/// Trains `network` on `(inputs, targets)`; samples are reshuffled every
/// epoch from `(config.seed, epoch)`.
pub fn fit(mut network: Network, inputs: &[Vec<f64>], targets: &[usize], config: &TrainConfig) -> Result<TrainedNet> {
    config.validate()?;
    if inputs.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    if inputs.len() != targets.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} inputs, {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    let mut state = AdadeltaState::new(network.n_params());
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut log = Vec::new();
    let started = Instant::now();

    for epoch in 0..config.max_epochs {
        let mut rng = rng_for(config.seed, &[stream::SHUFFLE, epoch as u64]);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| inputs[i].as_slice()).collect();
            let ts: Vec<usize> = batch.iter().map(|&i| targets[i]).collect();
            let (loss, grads) = network.batch_gradient(&xs, &ts)?;
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, loss });
            }
            loss_sum += loss * batch.len() as f64;
            adadelta_step(&mut network.params, &grads, &mut state, config.rho, config.eps)?;
        }
        let loss = loss_sum / inputs.len() as f64;
        log.push(EpochLog {
            epoch,
            loss,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        if loss <= config.stop_loss {
            break;
        }
    }
    Ok(TrainedNet { network, log })
}

/// Denominator floor for the relative error, so parameters whose true
/// gradient is essentially zero are judged on absolute error. With a step of
/// 1e-6 the central difference carries about 1e-10 of rounding error, well
/// under `1e-4 * REL_ERR_FLOOR`.
pub const REL_ERR_FLOOR: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck {
    pub max_rel_err: f64,
    pub worst_param: usize,
    pub checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR)
}

/// Compares every parameter's analytic gradient with a central difference.
pub fn grad_check(network: &Network, input: &[f64], target: usize, eps: f64) -> Result<GradCheck> {
    let (_, analytic) = network.gradient(input, target)?;
    let mut params = network.params.clone();
    let mut worst = GradCheck {
        max_rel_err: 0.0,
        worst_param: 0,
        checked: params.len(),
    };
    for i in 0..params.len() {
        let orig = params[i];
        params[i] = orig + eps;
        let up = network.loss_with(&params, input, target);
        params[i] = orig - eps;
        let down = network.loss_with(&params, input, target);
        params[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let err = relative_error(analytic[i], numeric);
        if err > worst.max_rel_err {
            worst.max_rel_err = err;
            worst.worst_param = i;
        }
    }
    Ok(worst)
}
