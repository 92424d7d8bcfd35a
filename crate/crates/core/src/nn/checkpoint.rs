//! JSON checkpoints with base64 little-endian `f32` tensors.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::network::Network;
use super::spec::LayerSpec;
use super::tensor::Tensor;
use super::NnError;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredTensor {
    pub name: String,
    pub shape: Vec<usize>,
    /// Base64 of the little-endian `f32` bytes.
    pub data: String,
}

impl StoredTensor {
    pub fn encode(name: &str, t: &Tensor<f32>) -> Self {
        let bytes: Vec<u8> = t.data.iter().flat_map(|v| v.to_le_bytes()).collect();
        StoredTensor { name: name.to_string(), shape: t.shape.clone(), data: STANDARD.encode(bytes) }
    }

    pub fn decode(&self) -> Result<Tensor<f32>, NnError> {
        let bytes = STANDARD.decode(&self.data).map_err(|e| NnError::Checkpoint(format!("{}: {e}", self.name)))?;
        let n: usize = self.shape.iter().product();
        if bytes.len() != 4 * n {
            return Err(NnError::Checkpoint(format!(
                "{}: {} bytes for shape {:?}",
                self.name,
                bytes.len(),
                self.shape
            )));
        }
        let data = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        Ok(Tensor::new(self.shape.clone(), data))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub model_kind: String,
    /// The model builder's configuration, stored verbatim.
    pub model_config: serde_json::Value,
    pub input_shape: Vec<usize>,
    pub layer_specs: Vec<LayerSpec>,
    pub rng_seed: u64,
    pub epoch: usize,
    pub metrics: serde_json::Value,
    pub params: Vec<StoredTensor>,
}

impl Checkpoint {
    pub fn capture(
        net: &Network<f32>,
        model_kind: &str,
        model_config: serde_json::Value,
        rng_seed: u64,
        epoch: usize,
        metrics: serde_json::Value,
    ) -> Self {
        Checkpoint {
            format_version: CHECKPOINT_VERSION,
            model_kind: model_kind.to_string(),
            model_config,
            input_shape: net.input_shape.clone(),
            layer_specs: net.layers.clone(),
            rng_seed,
            epoch,
            metrics,
            params: net.params.iter().map(|p| StoredTensor::encode(&p.name, &p.value)).collect(),
        }
    }

    pub fn network(&self) -> Result<Network<f32>, NnError> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(NnError::Checkpoint(format!("unsupported format version {}", self.format_version)));
        }
        let values = self.params.iter().map(StoredTensor::decode).collect::<Result<Vec<_>, _>>()?;
        let net = Network::from_params(self.input_shape.clone(), self.layer_specs.clone(), values)?;
        for (p, s) in net.params.iter().zip(&self.params) {
            if p.name != s.name {
                return Err(NnError::Checkpoint(format!("parameter {} stored as {}", p.name, s.name)));
            }
        }
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, NnError> {
        serde_json::from_str(s).map_err(|e| NnError::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        crate::io::write_atomic(path, |w| {
            serde_json::to_writer_pretty(&mut *w, self).map_err(|e| NnError::Checkpoint(e.to_string()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
