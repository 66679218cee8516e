use super::{Environment, Observation, StepResult};
use crate::error::EnvError;
use crate::exec::{self, ExecMode};

/// A batch of independent environments stepped together. Each environment
/// owns its simulation and random stream, so the batch result does not depend
/// on execution order.
pub struct VectorEnv<E> {
    envs: Vec<E>,
    pub mode: ExecMode,
}

impl<E: Environment> VectorEnv<E> {
    pub fn new(envs: Vec<E>, mode: ExecMode) -> Self {
        assert!(!envs.is_empty(), "a vector env needs at least one environment");
        Self { envs, mode }
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn envs_mut(&mut self) -> &mut [E] {
        &mut self.envs
    }

    pub fn reset_all(&mut self, seeds: &[u64]) -> Vec<Observation> {
        assert_eq!(seeds.len(), self.envs.len());
        self.envs.iter_mut().zip(seeds).map(|(e, &s)| e.reset(s)).collect()
    }

    /// Steps every environment with its own action; results are in index order.
    pub fn step_all(&mut self, actions: &[Vec<f64>]) -> Vec<Result<StepResult, EnvError>> {
        assert_eq!(actions.len(), self.envs.len());
        let mut work: Vec<(&mut E, Option<Result<StepResult, EnvError>>)> =
            self.envs.iter_mut().map(|e| (e, None)).collect();
        exec::for_each_mut(self.mode, &mut work, |i, (env, out)| *out = Some(env.step(&actions[i])));
        work.into_iter().map(|(_, r)| r.expect("every slot is filled")).collect()
    }
}
