//! Rollout collection and the outer training loop.

use serde::{Deserialize, Serialize};

use super::checkpoint::{RngSnapshot, StreamPosition};
use super::gae::{compute_gae, GaeStep};
use super::update::{ppo_update, Batch, LossParts};
use super::{ActorCritic, Adam, Checkpoint, ObsNormalizer, PpoConfig, CHECKPOINT_SCHEMA_VERSION};
use crate::env::{Environment, Observation, VectorEnv, ACT_DIM, OBS_DIM};
use crate::error::PpoError;
use crate::exec::ExecMode;
use crate::rng::{derive_seed, SimRng, Stream};

/// Consecutive non-finite updates tolerated before training aborts.
const MAX_BAD_UPDATES: usize = 3;

pub const CURVE_SCHEMA_VERSION: u32 = 1;

pub const CURVE_HEADER: &str =
    "schema_version,update,env_steps,episodes,mean_episode_reward,success_rate,policy_loss,value_loss,entropy,clip_fraction,approx_kl";

/// One learning-curve row. Episode statistics cover the episodes that ended
/// during this update's rollout; they are NaN when none did.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub update: u64,
    pub env_steps: u64,
    pub episodes: usize,
    pub mean_episode_reward: f64,
    pub success_rate: f64,
    pub losses: LossParts,
}

impl CurveRow {
    pub fn csv_line(&self) -> String {
        let l = &self.losses;
        format!(
            "{CURVE_SCHEMA_VERSION},{},{},{},{},{},{},{},{},{},{}",
            self.update,
            self.env_steps,
            self.episodes,
            self.mean_episode_reward,
            self.success_rate,
            l.policy_loss,
            l.value_loss,
            l.entropy,
            l.clip_fraction,
            l.approx_kl
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub curve: Vec<CurveRow>,
}

/// Seed of episode `k` of environment `env` during training.
pub fn episode_seed(master: u64, env: usize, k: u64) -> u64 {
    derive_seed(master, Stream::Goals, ((env as u64) << 32) | k)
}

struct Worker {
    rng: SimRng,
    rng_seed: u64,
    episodes: u64,
    episode_reward: f64,
    obs: Observation,
}

/// Trains a fresh policy on `envs` (one per rollout worker). Every source of
/// randomness is derived from `seed`, and workers only ever touch their own
/// environment, so the result is identical in sequential and parallel mode.
/// `on_update` sees each curve row together with the current checkpoint.
pub fn train<E, F>(
    envs: Vec<E>,
    env_name: &str,
    obs_scale: Vec<f64>,
    config: &PpoConfig,
    seed: u64,
    mode: ExecMode,
    mut on_update: F,
) -> Result<TrainOutcome, PpoError>
where
    E: Environment,
    F: FnMut(&CurveRow, &Checkpoint) -> Result<(), PpoError>,
{
    config.validate()?;
    if envs.len() != config.n_envs {
        return Err(PpoError::Config(format!(
            "{} environments supplied for n_envs = {}",
            envs.len(),
            config.n_envs
        )));
    }
    let n = config.n_envs;
    let mut venv = VectorEnv::new(envs, mode);
    let mut init_rng = crate::rng::stream_rng(seed, Stream::PolicyInit, 0);
    let mut policy = ActorCritic::new(OBS_DIM, ACT_DIM, &config.hidden, config.init_log_std, 0.01, &mut init_rng);
    let mut normalizer = ObsNormalizer::new(obs_scale);
    let mut adam = Adam::new(policy.params.len(), config.learning_rate);
    let mb_seed = derive_seed(seed, Stream::Minibatch, 0);
    let mut mb_rng = <SimRng as rand::SeedableRng>::seed_from_u64(mb_seed);

    let mut workers: Vec<Worker> = venv
        .envs_mut()
        .iter_mut()
        .enumerate()
        .map(|(i, env)| {
            let rng_seed = derive_seed(seed, Stream::Actions, i as u64);
            Worker {
                rng: <SimRng as rand::SeedableRng>::seed_from_u64(rng_seed),
                rng_seed,
                episodes: 1,
                episode_reward: 0.0,
                obs: env.reset(episode_seed(seed, i, 0)),
            }
        })
        .collect();

    let mut curve = Vec::new();
    let mut env_steps = 0u64;
    let mut bad_updates = 0usize;
    let mut last_checkpoint = None;
    for update in 1..=config.updates() {
        let mut traj: Vec<Vec<GaeStep>> = vec![Vec::with_capacity(config.horizon); n];
        let mut samples: Vec<Vec<(Vec<f64>, Vec<f64>, f64)>> = vec![Vec::with_capacity(config.horizon); n];
        let mut finished: Vec<(f64, bool)> = Vec::new();

        for _ in 0..config.horizon {
            let raw: Vec<Vec<f64>> = workers.iter().map(|w| w.obs.to_array().to_vec()).collect();
            normalizer.update(&raw);
            let mut actions = Vec::with_capacity(n);
            let mut pending = Vec::with_capacity(n);
            for (w, obs) in workers.iter_mut().zip(&raw) {
                let x = normalizer.normalize(obs);
                let s = policy.sample(&x, &mut w.rng)?;
                actions.push(s.action.clone());
                pending.push((x, s));
            }
            let results = venv.step_all(&actions);
            for (i, (result, (x, s))) in results.into_iter().zip(pending).enumerate() {
                let r = result?;
                let w = &mut workers[i];
                w.episode_reward += r.reward;
                let done = r.done();
                let terminal = if r.terminated {
                    !config.bootstrap_success
                } else {
                    r.info.truncation.is_some_and(|c| !c.bootstraps())
                };
                let next_value = if terminal {
                    0.0
                } else {
                    policy.value(&normalizer.normalize(&r.observation.to_array()))
                };
                traj[i].push(GaeStep {
                    reward: r.reward,
                    value: s.value,
                    next_value,
                    terminal,
                    episode_end: done,
                });
                samples[i].push((x, s.pre_tanh, s.log_prob));
                if done {
                    finished.push((w.episode_reward, r.terminated));
                    w.episode_reward = 0.0;
                    let k = w.episodes;
                    w.episodes += 1;
                    w.obs = venv.envs_mut()[i].reset(episode_seed(seed, i, k));
                } else {
                    w.obs = r.observation;
                }
            }
        }
        env_steps += (config.horizon * n) as u64;

        let mut batch = Batch::default();
        for (steps, recs) in traj.iter().zip(samples) {
            let (adv, ret) = compute_gae(steps, config.gamma, config.gae_lambda);
            for ((x, u, lp), (a, r)) in recs.into_iter().zip(adv.into_iter().zip(ret)) {
                batch.obs.push(x);
                batch.pre_tanh.push(u);
                batch.log_prob.push(lp);
                batch.advantages.push(a);
                batch.returns.push(r);
            }
        }

        let before = (policy.clone(), adam.clone());
        let losses = match ppo_update(&mut policy, &mut adam, &batch, config, &mut mb_rng) {
            Ok(l) => {
                bad_updates = 0;
                l
            }
            Err(PpoError::NonFinite(_)) => {
                bad_updates += 1;
                (policy, adam) = before;
                if bad_updates >= MAX_BAD_UPDATES {
                    return Err(PpoError::Diverged(bad_updates));
                }
                LossParts {
                    total: f64::NAN,
                    policy_loss: f64::NAN,
                    value_loss: f64::NAN,
                    entropy: f64::NAN,
                    clip_fraction: f64::NAN,
                    approx_kl: f64::NAN,
                }
            }
            Err(e) => return Err(e),
        };

        let episodes = finished.len();
        let (mean_episode_reward, success_rate) = if episodes == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let e = episodes as f64;
            (
                finished.iter().map(|f| f.0).sum::<f64>() / e,
                finished.iter().filter(|f| f.1).count() as f64 / e,
            )
        };
        let row = CurveRow {
            update,
            env_steps,
            episodes,
            mean_episode_reward,
            success_rate,
            losses,
        };
        let checkpoint = Checkpoint {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            env: env_name.to_string(),
            policy: policy.clone(),
            normalizer: normalizer.clone(),
            optimizer: adam.clone(),
            config: config.clone(),
            rng: RngSnapshot {
                master_seed: seed,
                actions: workers.iter().map(|w| StreamPosition::of(w.rng_seed, &w.rng)).collect(),
                minibatch: StreamPosition::of(mb_seed, &mb_rng),
                episodes_started: workers.iter().map(|w| w.episodes).collect(),
            },
            updates: update,
            env_steps,
        };
        on_update(&row, &checkpoint)?;
        curve.push(row);
        last_checkpoint = Some(checkpoint);
    }
    Ok(TrainOutcome {
        checkpoint: last_checkpoint.expect("validated configs run at least one update"),
        curve,
    })
}
