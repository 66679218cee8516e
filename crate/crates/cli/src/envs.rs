use anyhow::Result;
use tripod_core::env::{Environment, EpisodeConfig, Observation, StepResult, TripodEnv};
use tripod_core::error::EnvError;
use tripod_core::eval::PointMassEnv;

use crate::config::{EnvKind, RunConfig};

/// Either environment behind one concrete type.
#[derive(Debug, Clone)]
pub enum AnyEnv {
    Robot(Box<TripodEnv>),
    PointMass(PointMassEnv),
}

impl AnyEnv {
    pub fn build(config: &RunConfig) -> Result<Self> {
        Ok(match config.env {
            EnvKind::Robot => AnyEnv::Robot(Box::new(TripodEnv::new(&config.scene, config.episode.clone())?)),
            EnvKind::PointMass => AnyEnv::PointMass(PointMassEnv::new(config.episode.clone())?),
        })
    }
}

macro_rules! both {
    ($self:expr, $e:ident => $body:expr) => {
        match $self {
            AnyEnv::Robot($e) => $body,
            AnyEnv::PointMass($e) => $body,
        }
    };
}

impl Environment for AnyEnv {
    fn reset(&mut self, seed: u64) -> Observation {
        both!(self, e => e.reset(seed))
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult, EnvError> {
        both!(self, e => e.step(action))
    }

    fn observation(&self) -> Observation {
        both!(self, e => e.observation())
    }

    fn config(&self) -> &EpisodeConfig {
        both!(self, e => e.config())
    }

    fn config_mut(&mut self) -> &mut EpisodeConfig {
        both!(self, e => e.config_mut())
    }

    fn set_goal(&mut self, goal: [f64; 2]) {
        both!(self, e => e.set_goal(goal))
    }

    fn place(&mut self, xy: [f64; 2]) {
        both!(self, e => e.place(xy))
    }
}
