//! Versioned JSON checkpoints. Values are written in shortest round-trip
//! notation and parsed with correct rounding, so a save/load cycle is
//! bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use ssam_core::model::{ModelConfig, NamedTensor, Network, Snapshot};
use ssam_core::Tensor;

use crate::error::{CliError, Result};
use crate::io::write_atomic;

pub const FORMAT: &str = "ssam-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub input_length: usize,
    pub num_classes: usize,
    pub segments: usize,
    pub kernel_sizes: [usize; 2],
    pub channels: [usize; 2],
    pub with_ssam: bool,
}

impl From<&ModelConfig> for ConfigRecord {
    fn from(c: &ModelConfig) -> Self {
        ConfigRecord {
            input_length: c.input_length,
            num_classes: c.num_classes,
            segments: c.segments,
            kernel_sizes: c.kernel_sizes,
            channels: c.channels,
            with_ssam: c.with_ssam,
        }
    }
}

impl From<&ConfigRecord> for ModelConfig {
    fn from(c: &ConfigRecord) -> Self {
        ModelConfig {
            input_length: c.input_length,
            num_classes: c.num_classes,
            segments: c.segments,
            kernel_sizes: c.kernel_sizes,
            channels: c.channels,
            with_ssam: c.with_ssam,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    /// Seed of the run; the data split is recomputed from it.
    seed: u64,
    config: ConfigRecord,
    tensors: Vec<TensorRecord>,
}

/// A trained network together with the seed its data split came from.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub seed: u64,
    pub network: Network,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        let snapshot = self.network.snapshot();
        let file = CheckpointFile {
            format: FORMAT.into(),
            version: VERSION,
            seed: self.seed,
            config: self.network.config().into(),
            tensors: snapshot
                .entries
                .into_iter()
                .map(|e| TensorRecord {
                    name: e.name,
                    shape: e.tensor.shape().to_vec(),
                    data: e.tensor.into_data(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string(&file).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let file: CheckpointFile =
            serde_json::from_str(text).map_err(|e| CliError::format(path, e))?;
        if file.format != FORMAT {
            return Err(CliError::format(
                path,
                format!("not a checkpoint (format {:?})", file.format),
            ));
        }
        if file.version != VERSION {
            return Err(CliError::format(
                path,
                format!(
                    "unsupported checkpoint version {} (expected {VERSION})",
                    file.version
                ),
            ));
        }
        let config = ModelConfig::from(&file.config);
        let mut network = Network::new(&config, 0)?;
        let entries = file
            .tensors
            .into_iter()
            .map(|t| {
                Ok(NamedTensor {
                    tensor: Tensor::from_vec(&t.shape, t.data)?,
                    name: t.name,
                })
            })
            .collect::<ssam_core::Result<Vec<_>>>()?;
        network.restore(&Snapshot { entries })?;
        Ok(Checkpoint {
            seed: file.seed,
            network,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_json(&text, path)
    }
}
