use serde::{Deserialize, Serialize};

use super::{ActorCritic, Adam, ObsNormalizer, PpoConfig};
use crate::error::FormatError;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

/// Position of one ChaCha stream: its seed and the word offset reached.
/// The offset is a `u128`, kept as a decimal string for JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamPosition {
    pub seed: u64,
    pub word_pos: String,
}

impl StreamPosition {
    pub fn of(seed: u64, rng: &crate::rng::SimRng) -> Self {
        Self {
            seed,
            word_pos: rng.get_word_pos().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngSnapshot {
    pub master_seed: u64,
    pub actions: Vec<StreamPosition>,
    pub minibatch: StreamPosition,
    /// Episodes started so far by each environment.
    pub episodes_started: Vec<u64>,
}

/// Everything needed to evaluate a policy or continue from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    /// Which environment the policy was trained on, e.g. `tripod`.
    pub env: String,
    pub policy: ActorCritic,
    pub normalizer: ObsNormalizer,
    pub optimizer: Adam,
    pub config: PpoConfig,
    pub rng: RngSnapshot,
    pub updates: u64,
    pub env_steps: u64,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String, FormatError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value.get("schema_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != CHECKPOINT_SCHEMA_VERSION {
            return Err(FormatError::Version {
                kind: "checkpoint",
                found,
                expected: CHECKPOINT_SCHEMA_VERSION,
            });
        }
        let ckpt: Checkpoint = serde_json::from_value(value)?;
        if ckpt.policy.check().is_err() {
            return Err(FormatError::Build(crate::BuildError::Invariant(
                "checkpoint parameters do not match the declared network shape or are not finite".into(),
            )));
        }
        if ckpt.normalizer.dim() != ckpt.policy.obs_dim {
            return Err(FormatError::Build(crate::BuildError::Invariant(
                "normalizer width differs from the policy input width".into(),
            )));
        }
        Ok(ckpt)
    }

    /// Fails unless the policy fits an environment with the given sizes.
    pub fn check_dims(&self, obs_dim: usize, act_dim: usize) -> Result<(), FormatError> {
        if self.policy.obs_dim != obs_dim || self.policy.act_dim != act_dim {
            return Err(FormatError::Dimension {
                ckpt_obs: self.policy.obs_dim,
                ckpt_act: self.policy.act_dim,
                env_obs: obs_dim,
                env_act: act_dim,
            });
        }
        Ok(())
    }
}
