//! From-scratch LSTM forecaster.
//!
//! The default network stacks an LSTM layer, dropout, two more LSTM layers,
//! dropout and a one-unit dense head. It reads a window of feature rows
//! (price plus one compound score per news source) and predicts the next
//! normalized price. Gradients come from hand-written backpropagation through
//! time and are checked against finite differences in the test suite.
//!
//! ```
//! use newsflow::neural::{network_forward, Mode, NetworkConfig, NetworkParams};
//!
//! let config = NetworkConfig::stacked(5, 8, 0.2);
//! let mut params = NetworkParams::zeros(&config);
//! params.dense_b[0] = 0.25;
//! // with every weight at zero the hidden states vanish
//! let y = network_forward(&config, &params, &[0.1; 50], Mode::Eval).unwrap();
//! assert_eq!(y, 0.25);
//! ```

mod adam;
mod cell;
mod checkpoint;
mod network;
mod train;

use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use cell::{lstm_cell_forward, LstmLayerParams, LstmState, StepCache};
pub use checkpoint::{Checkpoint, TensorRecord, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use network::{
    loss_and_gradients, mse_loss, network_forward, predict, LayerSpec, Mode, NetworkConfig,
    NetworkParams, DEFAULT_DROPOUT, DEFAULT_HIDDEN,
};
pub use train::{
    evaluate_mse, initial_params, train, Example, TrainConfig, TrainReport, DEFAULT_EPOCHS,
    DEFAULT_PATIENCE,
};

/// Generator used for initialization, dropout masks and shuffling.
pub type NetRng = rand_chacha::ChaCha8Rng;

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid network config: {0}")]
    Config(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("empty input")]
    Empty,
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// A collection of parameter tensors visited in a fixed order.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Concatenation of all tensors.
    fn flat(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    /// Mutable access to the `idx`-th scalar of [`Parameters::flat`].
    fn flat_mut(&mut self, mut idx: usize) -> &mut f64 {
        for tensor in self.tensors_mut() {
            if idx < tensor.len() {
                return &mut tensor[idx];
            }
            idx -= tensor.len();
        }
        panic!("parameter index out of range");
    }
}

impl Parameters for Vec<f64> {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![self.as_slice()]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.as_mut_slice()]
    }
}
