//! Seeded training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::network::{loss_and_gradients, predict, mse_loss, NetworkConfig, NetworkParams};
use super::{NetRng, NeuralError, Parameters};

pub const DEFAULT_EPOCHS: usize = 200;
pub const DEFAULT_PATIENCE: usize = 20;

/// A training pair: a flattened input window and its scalar target.
pub trait Example {
    fn features(&self) -> &[f64];
    fn target(&self) -> f64;
}

impl Example for (Vec<f64>, f64) {
    fn features(&self) -> &[f64] {
        &self.0
    }

    fn target(&self) -> f64 {
        self.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub seed: u64,
    /// `None` trains on the whole set per step.
    pub batch_size: Option<usize>,
    /// Stop after this many epochs without a lower training loss.
    pub early_stop_patience: Option<usize>,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_EPOCHS,
            seed: 0,
            batch_size: None,
            early_stop_patience: None,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training-mode loss over each epoch's batches.
    pub epoch_losses: Vec<f64>,
    pub params: NetworkParams,
    pub optimizer: AdamState,
    pub seed: u64,
    pub stopped_early: bool,
}

/// Parameters drawn by [`train`] before its first update.
pub fn initial_params(config: &NetworkConfig, seed: u64) -> NetworkParams {
    let mut rng = NetRng::seed_from_u64(seed);
    NetworkParams::init(config, &mut rng)
}

pub fn train<E: Example>(
    config: &NetworkConfig,
    examples: &[E],
    hyper: &TrainConfig,
) -> Result<TrainReport, NeuralError> {
    config.validate()?;
    if examples.is_empty() {
        return Err(NeuralError::Empty);
    }
    let mut rng = NetRng::seed_from_u64(hyper.seed);
    let mut params = NetworkParams::init(config, &mut rng);
    let mut optimizer = AdamState::new(hyper.adam, params.num_params())?;
    let n = examples.len();
    let batch = hyper.batch_size.unwrap_or(n).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(hyper.epochs);
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut stopped_early = false;

    for epoch in 0..hyper.epochs {
        if batch < n {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let windows: Vec<&[f64]> = chunk.iter().map(|&i| examples[i].features()).collect();
            let targets: Vec<f64> = chunk.iter().map(|&i| examples[i].target()).collect();
            let (loss, grads) = loss_and_gradients(config, &params, &windows, &targets, Some(&mut rng))?;
            if !loss.is_finite() {
                return Err(NeuralError::Diverged { epoch, loss });
            }
            optimizer.update(&mut params, &grads)?;
            total += loss * chunk.len() as f64;
        }
        let epoch_loss = total / n as f64;
        if !epoch_loss.is_finite() {
            return Err(NeuralError::Diverged {
                epoch,
                loss: epoch_loss,
            });
        }
        epoch_losses.push(epoch_loss);
        if let Some(patience) = hyper.early_stop_patience {
            if epoch_loss < best {
                best = epoch_loss;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= patience {
                    stopped_early = true;
                    break;
                }
            }
        }
    }
    Ok(TrainReport {
        epoch_losses,
        params,
        optimizer,
        seed: hyper.seed,
        stopped_early,
    })
}

/// Eval-mode mean squared error of `params` over `examples`.
pub fn evaluate_mse<E: Example>(
    config: &NetworkConfig,
    params: &NetworkParams,
    examples: &[E],
) -> Result<f64, NeuralError> {
    let windows: Vec<&[f64]> = examples.iter().map(|e| e.features()).collect();
    let targets: Vec<f64> = examples.iter().map(|e| e.target()).collect();
    let preds = predict(config, params, &windows)?;
    mse_loss(&preds, &targets)
}
