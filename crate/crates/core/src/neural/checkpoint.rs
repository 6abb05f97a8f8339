//! Versioned JSON checkpoints.
//!
//! Tensors are stored row-major under their declared shapes. Floats go
//! through the shortest round-trip representation, so a save/load cycle is
//! bit exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::network::{NetworkConfig, NetworkParams};
use super::{NeuralError, Parameters};

pub const CHECKPOINT_FORMAT: &str = "newsflow-lstm";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub config: NetworkConfig,
    pub tensors: Vec<TensorRecord>,
    pub optimizer: Option<AdamState>,
}

impl Checkpoint {
    pub fn new(
        config: &NetworkConfig,
        params: &NetworkParams,
        optimizer: Option<&AdamState>,
        seed: u64,
    ) -> Self {
        let tensors = params
            .tensor_specs()
            .into_iter()
            .zip(params.tensors())
            .map(|((name, shape), data)| TensorRecord {
                name,
                shape,
                data: data.to_vec(),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            seed,
            config: config.clone(),
            tensors,
            optimizer: optimizer.cloned(),
        }
    }

    /// Rebuilds parameters, checking every tensor name and shape against the
    /// stored config.
    pub fn params(&self) -> Result<NetworkParams, NeuralError> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(NeuralError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        self.config.validate()?;
        let mut params = NetworkParams::zeros(&self.config);
        let specs = params.tensor_specs();
        if specs.len() != self.tensors.len() {
            return Err(NeuralError::Checkpoint(format!(
                "expected {} tensors, found {}",
                specs.len(),
                self.tensors.len()
            )));
        }
        for (((name, shape), slot), record) in
            specs.into_iter().zip(params.tensors_mut()).zip(&self.tensors)
        {
            if record.name != name || record.shape != shape || record.data.len() != slot.len() {
                return Err(NeuralError::Checkpoint(format!(
                    "tensor {} {:?} does not match expected {name} {shape:?}",
                    record.name, record.shape
                )));
            }
            slot.copy_from_slice(&record.data);
        }
        Ok(params)
    }

    pub fn to_writer<W: Write>(&self, writer: W) -> Result<(), NeuralError> {
        serde_json::to_writer(writer, self).map_err(|e| NeuralError::Checkpoint(e.to_string()))
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, NeuralError> {
        serde_json::from_reader(reader).map_err(|e| NeuralError::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NeuralError> {
        let file = File::create(path.as_ref()).map_err(|e| NeuralError::Checkpoint(e.to_string()))?;
        let mut w = BufWriter::new(file);
        self.to_writer(&mut w)?;
        w.flush().map_err(|e| NeuralError::Checkpoint(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NeuralError> {
        let file = File::open(path.as_ref()).map_err(|e| NeuralError::Checkpoint(e.to_string()))?;
        Self::from_reader(BufReader::new(file))
    }
}
