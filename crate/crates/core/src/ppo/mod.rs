//! Proximal policy optimization for continuous actions, written against flat
//! parameter vectors so the whole learner stays dependency-free.

mod adam;
mod checkpoint;
mod gae;
mod mlp;
mod normalizer;
mod policy;
mod train;
mod update;

pub use adam::{clip_grad_norm, Adam};
pub use checkpoint::{Checkpoint, RngSnapshot, StreamPosition, CHECKPOINT_SCHEMA_VERSION};
pub use gae::{compute_gae, GaeStep};
pub use mlp::{MlpCache, MlpShape};
pub use normalizer::ObsNormalizer;
pub use policy::{log_one_minus_tanh_sq, ActionSample, ActorCritic, LOG_STD_MAX, LOG_STD_MIN};
pub use train::{train, CurveRow, TrainOutcome, CURVE_HEADER, CURVE_SCHEMA_VERSION};
pub use update::{loss_and_grad, normalize_advantages, ppo_update, Batch, LossParts};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_range: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    /// Steps per environment per rollout.
    pub horizon: usize,
    pub n_envs: usize,
    pub total_steps: u64,
    pub hidden: Vec<usize>,
    pub init_log_std: f64,
    /// Treat reaching the goal like a time limit for bootstrapping.
    pub bootstrap_success: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_range: 0.2,
            learning_rate: 3e-4,
            epochs: 10,
            minibatch_size: 64,
            entropy_coef: 0.0,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            horizon: 2048,
            n_envs: 1,
            total_steps: 1_000_000,
            hidden: vec![64, 64],
            init_log_std: 0.0,
            bootstrap_success: true,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), crate::PpoError> {
        let bad = |m: &str| Err(crate::PpoError::Config(m.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("ppo.gamma must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("ppo.gae_lambda must be in [0, 1]");
        }
        if !(self.clip_range >= 0.0) {
            return bad("ppo.clip_range must be >= 0");
        }
        if !(self.learning_rate > 0.0) {
            return bad("ppo.learning_rate must be > 0");
        }
        if self.epochs < 1 || self.minibatch_size < 1 || self.horizon < 1 || self.n_envs < 1 {
            return bad("ppo.epochs, minibatch_size, horizon and n_envs must be >= 1");
        }
        if self.total_steps < (self.horizon * self.n_envs) as u64 {
            return bad("ppo.total_steps must cover at least one rollout (horizon × n_envs)");
        }
        if !(self.max_grad_norm > 0.0) {
            return bad("ppo.max_grad_norm must be > 0");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("ppo.hidden needs at least one non-empty layer");
        }
        Ok(())
    }

    /// Number of rollout/update cycles in a run.
    pub fn updates(&self) -> u64 {
        self.total_steps / (self.horizon * self.n_envs) as u64
    }
}
