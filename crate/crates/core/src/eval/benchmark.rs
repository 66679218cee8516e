use serde::{Deserialize, Serialize};

use super::Controller;
use crate::env::{goal_distance, Environment, TruncationCause};
use crate::error::EnvError;
use crate::exec::{self, ExecMode};
use crate::rng::{derive_seed, Stream};

pub const BENCHMARK_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeRecord {
    pub index: usize,
    pub seed: u64,
    pub goal: [f64; 2],
    pub reached: bool,
    /// Steps to reach the goal, or `max_steps` when it was not reached.
    pub steps: usize,
    /// Steps actually simulated.
    pub steps_taken: usize,
    /// Smallest goal distance over the episode, initial state included, mm.
    pub min_distance: f64,
    /// Planar position where `min_distance` was attained.
    pub best_position: [f64; 2],
    pub total_reward: f64,
    pub truncation: Option<TruncationCause>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkAggregate {
    pub episodes: usize,
    pub success_rate: f64,
    /// Over all episodes, unreached ones counted at `max_steps`.
    pub average_steps: f64,
    /// Over reached episodes only; absent when none were reached.
    pub average_steps_successful: Option<f64>,
    pub average_min_distance: f64,
    pub mean_episode_reward: f64,
}

/// Published results of the original study, reported next to ours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaperBenchmarkReference {
    pub success_rate: f64,
    pub average_steps: f64,
    pub average_distance_mm: f64,
}

impl Default for PaperBenchmarkReference {
    fn default() -> Self {
        Self {
            success_rate: 0.82,
            average_steps: 388.96,
            average_distance_mm: 18.762,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalBenchmarkReport {
    pub schema_version: u32,
    pub seed: u64,
    pub distance_threshold: f64,
    pub max_steps: usize,
    pub episodes: Vec<EpisodeRecord>,
    pub aggregate: BenchmarkAggregate,
    pub paper_reference: PaperBenchmarkReference,
}

impl GoalBenchmarkReport {
    pub fn summary(&self) -> String {
        let a = &self.aggregate;
        let p = &self.paper_reference;
        let successful = a
            .average_steps_successful
            .map_or_else(|| "n/a".to_string(), |s| format!("{s:.2}"));
        format!(
            "episodes {}\n\
             success rate          {:.3}   (reference {:.2})\n\
             average steps         {:.2}   (reference {:.2}; successful episodes only: {successful})\n\
             average min distance  {:.3} mm (reference {:.3} mm)\n\
             mean episode reward   {:.3}",
            a.episodes, a.success_rate, p.success_rate, a.average_steps, p.average_steps, a.average_min_distance,
            p.average_distance_mm, a.mean_episode_reward
        )
    }
}

fn run_episode<E: Environment + Clone, C: Controller>(
    template: &E,
    controller: &C,
    index: usize,
    seed: u64,
) -> Result<EpisodeRecord, EnvError> {
    let mut env = template.clone();
    let mut obs = env.reset(seed);
    // Reset is the rest state, whose platform height is the goal height.
    let goal = obs.goal;
    let max_steps = env.config().max_steps;
    let mut min_distance = goal_distance([obs.pose.x, obs.pose.y, obs.pose.z], goal, obs.pose.z);
    let mut best_position = [obs.pose.x, obs.pose.y];
    let mut total_reward = 0.0;
    let mut steps_taken = 0;
    loop {
        let r = env.step(&controller.act(&obs))?;
        steps_taken += 1;
        total_reward += r.reward;
        obs = r.observation;
        if r.info.d < min_distance {
            min_distance = r.info.d;
            best_position = [obs.pose.x, obs.pose.y];
        }
        if r.done() {
            return Ok(EpisodeRecord {
                index,
                seed,
                goal,
                reached: r.terminated,
                steps: if r.terminated { steps_taken } else { max_steps },
                steps_taken,
                min_distance,
                best_position,
                total_reward,
                truncation: r.info.truncation,
            });
        }
    }
}

/// Runs `n` episodes from the rest state at the origin, each with a goal drawn
/// from the evaluation stream of `seed`. Episodes are independent and may run
/// in parallel; records are keyed by index.
pub fn run_goal_benchmark<E, C>(
    env: &E,
    controller: &C,
    n: usize,
    seed: u64,
    mode: ExecMode,
) -> Result<GoalBenchmarkReport, EnvError>
where
    E: Environment + Clone + Sync,
    C: Controller,
{
    let indices: Vec<usize> = (0..n).collect();
    let records = exec::map(mode, &indices, |_, &i| {
        run_episode(env, controller, i, derive_seed(seed, Stream::EvalGoals, i as u64))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let e = n.max(1) as f64;
    let reached: Vec<&EpisodeRecord> = records.iter().filter(|r| r.reached).collect();
    let aggregate = BenchmarkAggregate {
        episodes: n,
        success_rate: reached.len() as f64 / e,
        average_steps: records.iter().map(|r| r.steps as f64).sum::<f64>() / e,
        average_steps_successful: (!reached.is_empty())
            .then(|| reached.iter().map(|r| r.steps as f64).sum::<f64>() / reached.len() as f64),
        average_min_distance: records.iter().map(|r| r.min_distance).sum::<f64>() / e,
        mean_episode_reward: records.iter().map(|r| r.total_reward).sum::<f64>() / e,
    };
    Ok(GoalBenchmarkReport {
        schema_version: BENCHMARK_SCHEMA_VERSION,
        seed,
        distance_threshold: env.config().distance_threshold,
        max_steps: env.config().max_steps,
        episodes: records,
        aggregate,
        paper_reference: PaperBenchmarkReference::default(),
    })
}
