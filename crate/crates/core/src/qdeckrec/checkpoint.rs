use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::MlpParams;
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointWeights {
    /// One row per input, each of length `hidden`.
    pub w1: Vec<Vec<f64>>,
    pub w2: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointBiases {
    pub b1: Vec<f64>,
    pub b2: f64,
}

/// Where a training run stood when the checkpoint was written.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub next_episode: u64,
    pub replay_beta: f64,
}

/// Versioned on-disk form of a trained network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    /// `"qdeckrec"` or `"predictor"`.
    pub kind: String,
    pub n: usize,
    pub d: usize,
    pub hidden: usize,
    pub input_dim: usize,
    #[serde(default)]
    pub pool_seed: Option<u64>,
    pub weights: CheckpointWeights,
    pub biases: CheckpointBiases,
    pub train_config: serde_json::Value,
    pub episode_count: u64,
    pub rng_state: RngState,
}

impl Checkpoint {
    pub fn new(kind: &str, n: usize, d: usize, theta: &MlpParams) -> Self {
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            kind: kind.to_string(),
            n,
            d,
            hidden: theta.hidden,
            input_dim: theta.input_dim,
            pool_seed: None,
            weights: CheckpointWeights {
                w1: theta.w1.chunks(theta.hidden.max(1)).map(<[f64]>::to_vec).collect(),
                w2: theta.w2.clone(),
            },
            biases: CheckpointBiases {
                b1: theta.b1.clone(),
                b2: theta.b2,
            },
            train_config: serde_json::Value::Null,
            episode_count: 0,
            rng_state: RngState::default(),
        }
    }

    pub fn params(&self) -> Result<MlpParams> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Configuration(format!(
                "unsupported checkpoint format version {}",
                self.format_version
            )));
        }
        if self.weights.w1.len() != self.input_dim || self.weights.w1.iter().any(|r| r.len() != self.hidden) {
            return Err(Error::invalid("checkpoint weight rows do not match input_dim x hidden"));
        }
        let p = MlpParams {
            input_dim: self.input_dim,
            hidden: self.hidden,
            w1: self.weights.w1.concat(),
            b1: self.biases.b1.clone(),
            w2: self.weights.w2.clone(),
            b2: self.biases.b2,
        };
        p.check_shapes()?;
        if !p.is_finite() {
            return Err(Error::invalid("checkpoint contains non-finite parameters"));
        }
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let theta = MlpParams::init(21, 7, 3);
        let mut ck = Checkpoint::new("qdeckrec", 10, 3, &theta);
        ck.episode_count = 50;
        ck.train_config = serde_json::json!({"d": 3});
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.params().unwrap(), theta);
        assert_eq!(back.weights.w1.len(), 21);
    }

    #[test]
    fn rejects_wrong_version_and_shapes() {
        let theta = MlpParams::init(5, 2, 1);
        let mut ck = Checkpoint::new("qdeckrec", 2, 1, &theta);
        ck.format_version = 99;
        assert!(ck.params().is_err());
        let mut ck = Checkpoint::new("qdeckrec", 2, 1, &theta);
        ck.weights.w1.pop();
        assert!(ck.params().is_err());
    }
}
