//! Goal-reaching benchmark, arc-trajectory following, result maps, and the
//! point-mass environment used to check the learner on its own.

mod benchmark;
mod map;
mod point_mass;
mod trajectory;

pub use benchmark::{
    run_goal_benchmark, BenchmarkAggregate, EpisodeRecord, GoalBenchmarkReport, PaperBenchmarkReference,
    BENCHMARK_SCHEMA_VERSION,
};
pub use map::{benchmark_csv, benchmark_svg, trajectory_csv, trajectory_svg};
pub use point_mass::{action_direction, action_toward, PointMassEnv, POINT_MASS_HEIGHT};
pub use trajectory::{
    make_arc_waypoints, point_to_polyline_distance, run_trajectory, PaperTrajectoryReference, TrajectoryReport,
    TRAJECTORY_SCHEMA_VERSION,
};

use crate::env::{Observation, ACT_DIM, OBS_DIM};
use crate::ppo::{ActorCritic, Checkpoint, ObsNormalizer};
use crate::rng::{stream_rng, Stream};

/// Anything that maps an observation to an action.
pub trait Controller: Sync {
    fn act(&self, obs: &Observation) -> Vec<f64>;
}

impl<F: Fn(&Observation) -> Vec<f64> + Sync> Controller for F {
    fn act(&self, obs: &Observation) -> Vec<f64> {
        self(obs)
    }
}

/// A policy run at its mean action `tanh(μ(normalize(obs)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanPolicy {
    pub policy: ActorCritic,
    pub normalizer: ObsNormalizer,
}

impl MeanPolicy {
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Self {
        Self {
            policy: ckpt.policy.clone(),
            normalizer: ckpt.normalizer.clone(),
        }
    }

    /// Frozen, randomly initialized network with unit output gain and a fresh
    /// normalizer: the untrained baseline.
    pub fn random(seed: u64, hidden: &[usize], obs_scale: Vec<f64>) -> Self {
        let mut rng = stream_rng(seed, Stream::Baseline, 0);
        Self {
            policy: ActorCritic::new(OBS_DIM, ACT_DIM, hidden, 0.0, 1.0, &mut rng),
            normalizer: ObsNormalizer::new(obs_scale),
        }
    }
}

impl Controller for MeanPolicy {
    fn act(&self, obs: &Observation) -> Vec<f64> {
        self.policy.mean_action(&self.normalizer.normalize(&obs.to_array()))
    }
}

/// Scale applied to observations before normalization: positions and goals
/// from mm to units of 100 mm, angles left in degrees.
pub fn default_obs_scale() -> Vec<f64> {
    vec![0.01, 0.01, 0.01, 1.0, 1.0, 1.0, 0.01, 0.01]
}
