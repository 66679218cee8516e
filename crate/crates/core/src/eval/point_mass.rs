//! A kinematic point mass behind the robot's observation/action interface.

use crate::env::{Environment, Episode, EpisodeConfig, Observation, StepResult, ACT_DIM};
use crate::error::{BuildError, EnvError};
use crate::physics::BasePose;

/// Constant platform height reported by the point mass, mm.
pub const POINT_MASS_HEIGHT: f64 = 50.0;

#[derive(Debug, Clone)]
pub struct PointMassEnv {
    episode: Episode,
    position: [f64; 2],
    /// mm/s
    pub max_speed: f64,
    /// Seconds per action.
    pub control_period: f64,
}

/// Fixed linear map from the 9-D action to a planar velocity direction:
/// `(2/9)·Σ a_k·(cos θ_k, sin θ_k)` with `θ_k = 40°·k`, capped at unit norm.
pub fn action_direction(action: &[f64]) -> [f64; 2] {
    let mut v = [0.0, 0.0];
    for (k, a) in action.iter().enumerate() {
        let theta = (40.0 * k as f64).to_radians();
        let a = a.clamp(-1.0, 1.0);
        v[0] += a * theta.cos();
        v[1] += a * theta.sin();
    }
    let scale = 2.0 / ACT_DIM as f64;
    let (x, y) = (v[0] * scale, v[1] * scale);
    let norm = x.hypot(y);
    if norm > 1.0 {
        [x / norm, y / norm]
    } else {
        [x, y]
    }
}

/// The action whose direction is the unit vector at angle `phi` (radians).
pub fn action_toward(phi: f64) -> Vec<f64> {
    (0..ACT_DIM).map(|k| ((40.0 * k as f64).to_radians() - phi).cos()).collect()
}

impl PointMassEnv {
    pub fn new(config: EpisodeConfig) -> Result<Self, BuildError> {
        config.validate()?;
        let control_period = config.control_substeps as f64 * 0.01;
        Ok(Self {
            episode: Episode::new(config, POINT_MASS_HEIGHT),
            position: [0.0, 0.0],
            max_speed: 100.0,
            control_period,
        })
    }

    fn pose(&self) -> BasePose {
        BasePose {
            x: self.position[0],
            y: self.position[1],
            z: POINT_MASS_HEIGHT,
            ..BasePose::default()
        }
    }
}

impl Environment for PointMassEnv {
    fn reset(&mut self, seed: u64) -> Observation {
        self.position = [0.0, 0.0];
        self.episode.start(seed);
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult, EnvError> {
        self.episode.check_action(action)?;
        let dir = action_direction(action);
        let v = [dir[0] * self.max_speed, dir[1] * self.max_speed];
        self.position[0] += v[0] * self.control_period;
        self.position[1] += v[1] * self.control_period;
        Ok(self.episode.finish_step(self.pose(), v, POINT_MASS_HEIGHT, false))
    }

    fn observation(&self) -> Observation {
        Observation {
            pose: self.pose(),
            goal: self.episode.goal,
        }
    }

    fn config(&self) -> &EpisodeConfig {
        &self.episode.config
    }

    fn config_mut(&mut self) -> &mut EpisodeConfig {
        &mut self.episode.config
    }

    fn set_goal(&mut self, goal: [f64; 2]) {
        self.episode.goal = goal;
        self.episode.steps = 0;
        self.episode.active = true;
    }

    fn place(&mut self, xy: [f64; 2]) {
        self.position = xy;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::proximity_term;

    #[test]
    fn zero_action_stands_still_and_earns_only_proximity() {
        let mut e = PointMassEnv::new(EpisodeConfig::default()).unwrap();
        let obs = e.reset(4);
        let r = e.step(&[0.0; ACT_DIM]).unwrap();
        assert_eq!(r.observation.pose.x, 0.0);
        assert_eq!(r.observation.pose.y, 0.0);
        let d = obs.goal[0].hypot(obs.goal[1]);
        assert!((r.reward - proximity_term(d, e.config().d_max)).abs() < 1e-12);
    }

    #[test]
    fn direction_map_recovers_unit_headings() {
        for deg in [0.0, 33.0, 90.0, 200.0, 315.0] {
            let phi = f64::to_radians(deg);
            let d = action_direction(&action_toward(phi));
            assert!((d[0] - phi.cos()).abs() < 1e-12 && (d[1] - phi.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn straight_line_policy_arrives_within_the_kinematic_bound() {
        let mut e = PointMassEnv::new(EpisodeConfig::default()).unwrap();
        for seed in 0..200 {
            let obs = e.reset(seed);
            let d = obs.goal[0].hypot(obs.goal[1]);
            let bound = (d / (e.max_speed * e.control_period)).ceil() as usize;
            let mut steps = 0;
            loop {
                let o = e.observation();
                let phi = (o.goal[1] - o.pose.y).atan2(o.goal[0] - o.pose.x);
                let r = e.step(&action_toward(phi)).unwrap();
                steps += 1;
                if r.done() {
                    assert!(r.terminated);
                    break;
                }
            }
            assert!(steps <= bound, "seed {seed}: {steps} > {bound}");
        }
    }
}
