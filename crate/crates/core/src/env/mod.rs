//! Episodic goal-reaching environment over the robot simulation.
//!
//! Observations are the platform pose plus the goal, `(x, y, z, α, β, γ, x_g,
//! y_g)` in mm and degrees. Actions are nine values in `[−1, 1]` mapped onto
//! cable displacements `[0, displacement_max]`.

mod reward;
mod trace;
mod vector;

pub use reward::{compute_reward, goal_distance, proximity_term, sign0, RewardInputs};
pub use trace::{TraceWriter, TRACE_SCHEMA_VERSION};
pub use vector::VectorEnv;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::cable::CableCommand;
use crate::error::{BuildError, EnvError};
use crate::physics::{base_pose, BasePose, Vec3};
use crate::rng::SimRng;
use crate::scene::{SceneConfig, Simulation};

pub const OBS_DIM: usize = 8;
pub const ACT_DIM: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub max_steps: usize,
    /// mm
    pub distance_threshold: f64,
    /// Range of `|x_g|` and `|y_g|`, mm.
    pub goal_band: [f64; 2],
    /// `(z_min, z_max)` in mm; when absent, 0.4× and 1.6× the rest height.
    pub height_limits: Option<[f64; 2]>,
    /// degrees, applied to roll and pitch
    pub tilt_limit: f64,
    /// mm
    pub d_max: f64,
    /// Physics steps per action.
    pub control_substeps: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            max_steps: 1000,
            distance_threshold: 20.0,
            goal_band: [40.0, 100.0],
            height_limits: None,
            tilt_limit: 45.0,
            d_max: 150.0,
            control_substeps: 5,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), BuildError> {
        if self.max_steps < 1 {
            return Err(BuildError::param("episode.max_steps", "must be >= 1"));
        }
        if !(self.distance_threshold > 0.0) {
            return Err(BuildError::param("episode.distance_threshold", "must be > 0"));
        }
        let [lo, hi] = self.goal_band;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(BuildError::param("episode.goal_band", "need 0 < lower < upper"));
        }
        // An infinite threshold is allowed as a degenerate test setting.
        if self.distance_threshold.is_finite() && self.distance_threshold >= lo {
            return Err(BuildError::param(
                "episode.distance_threshold",
                "must be below the goal band lower bound",
            ));
        }
        if self.distance_threshold.is_finite() && !(self.d_max > self.distance_threshold) {
            return Err(BuildError::param("episode.d_max", "must exceed distance_threshold"));
        }
        if !(self.tilt_limit > 0.0) {
            return Err(BuildError::param("episode.tilt_limit", "must be > 0"));
        }
        if self.control_substeps < 1 {
            return Err(BuildError::param("episode.control_substeps", "must be >= 1"));
        }
        if let Some([a, b]) = self.height_limits {
            if !(a < b) {
                return Err(BuildError::param("episode.height_limits", "need z_min < z_max"));
            }
        }
        Ok(())
    }

    fn resolved_height_limits(&self, rest_height: f64) -> [f64; 2] {
        self.height_limits.unwrap_or([0.4 * rest_height, 1.6 * rest_height])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub pose: BasePose,
    pub goal: [f64; 2],
}

impl Observation {
    pub fn to_array(&self) -> [f64; OBS_DIM] {
        let p = &self.pose;
        [p.x, p.y, p.z, p.roll, p.pitch, p.yaw, self.goal[0], self.goal[1]]
    }
}

/// Maps a normalized action in `[−1, 1]` to a displacement in `[0, max]`.
pub fn action_to_displacement(a: f64, max: f64) -> f64 {
    (a.clamp(-1.0, 1.0) + 1.0) * 0.5 * max
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationCause {
    TimeLimit,
    Height,
    Tilt,
    PhysicsFailure,
}

impl TruncationCause {
    /// Whether the value of the final state should be bootstrapped: only a
    /// time limit cuts off an episode that could otherwise have continued.
    pub fn bootstraps(self) -> bool {
        matches!(self, TruncationCause::TimeLimit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Distance to the goal with `z_g` at the rest height, mm.
    pub d: f64,
    /// mm/s
    pub v_x: f64,
    pub v_y: f64,
    /// Number of steps taken in this episode, including this one.
    pub step_index: usize,
    pub truncation: Option<TruncationCause>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: StepInfo,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// Common interface of the robot and point-mass environments.
pub trait Environment: Send {
    fn reset(&mut self, seed: u64) -> Observation;
    fn step(&mut self, action: &[f64]) -> Result<StepResult, EnvError>;
    fn observation(&self) -> Observation;
    fn config(&self) -> &EpisodeConfig;
    fn config_mut(&mut self) -> &mut EpisodeConfig;
    /// Replaces the goal without touching the robot; the step counter restarts.
    fn set_goal(&mut self, goal: [f64; 2]);
    /// Test hook: moves the agent rigidly so its planar position is `xy`.
    fn place(&mut self, xy: [f64; 2]);
}

/// Draws `(x_g, y_g)` with `|·| ~ U(band)` and an independent fair sign per axis.
pub fn sample_goal(rng: &mut SimRng, band: [f64; 2]) -> [f64; 2] {
    let mut axis = || {
        let mut m = band[0];
        while m <= band[0] {
            m = rng.random_range(band[0]..band[1]);
        }
        if rng.random_bool(0.5) {
            m
        } else {
            -m
        }
    };
    let x = axis();
    let y = axis();
    [x, y]
}

/// Goal bookkeeping and flag logic shared by both environments.
#[derive(Debug, Clone)]
pub(crate) struct Episode {
    pub config: EpisodeConfig,
    pub goal: [f64; 2],
    pub goal_height: f64,
    pub steps: usize,
    pub active: bool,
}

impl Episode {
    pub fn new(config: EpisodeConfig, goal_height: f64) -> Self {
        Self {
            config,
            goal: [0.0, 0.0],
            goal_height,
            steps: 0,
            active: false,
        }
    }

    pub fn start(&mut self, seed: u64) {
        let mut rng = SimRng::seed_from_u64(seed);
        self.goal = sample_goal(&mut rng, self.config.goal_band);
        self.steps = 0;
        self.active = true;
    }

    pub fn check_action(&self, action: &[f64]) -> Result<(), EnvError> {
        if !self.active {
            return Err(EnvError::EpisodeOver);
        }
        if action.len() != ACT_DIM {
            return Err(EnvError::ActionDimension {
                expected: ACT_DIM,
                actual: action.len(),
            });
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(EnvError::NonFiniteAction);
        }
        Ok(())
    }

    /// Scores the new pose and sets the flags. `failed` marks a physics
    /// failure during the step.
    pub fn finish_step(&mut self, pose: BasePose, velocity: [f64; 2], rest_height: f64, failed: bool) -> StepResult {
        self.steps += 1;
        let position = [pose.x, pose.y, pose.z];
        let inputs = RewardInputs {
            position,
            roll: pose.roll,
            pitch: pose.pitch,
            velocity,
            goal: self.goal,
            goal_height: self.goal_height,
        };
        let reward = compute_reward(&inputs, &self.config);
        let d = goal_distance(position, self.goal, self.goal_height);
        let terminated = !failed && d <= self.config.distance_threshold;
        let [z_min, z_max] = self.config.resolved_height_limits(rest_height);
        let cause = if failed {
            Some(TruncationCause::PhysicsFailure)
        } else if terminated {
            None
        } else if pose.roll.abs() > self.config.tilt_limit || pose.pitch.abs() > self.config.tilt_limit {
            Some(TruncationCause::Tilt)
        } else if pose.z < z_min || pose.z > z_max {
            Some(TruncationCause::Height)
        } else if self.steps >= self.config.max_steps {
            Some(TruncationCause::TimeLimit)
        } else {
            None
        };
        let truncated = cause.is_some();
        self.active = !(terminated || truncated);
        StepResult {
            observation: Observation { pose, goal: self.goal },
            reward,
            terminated,
            truncated,
            info: StepInfo {
                d,
                v_x: velocity[0],
                v_y: velocity[1],
                step_index: self.steps,
                truncation: cause,
            },
        }
    }
}

/// The tripod robot on a flat floor.
#[derive(Debug, Clone)]
pub struct TripodEnv {
    template: Simulation,
    sim: Simulation,
    episode: Episode,
    rest_pose: BasePose,
    pose: BasePose,
}

impl TripodEnv {
    pub fn new(scene: &SceneConfig, config: EpisodeConfig) -> Result<Self, BuildError> {
        config.validate()?;
        let template = Simulation::robot(scene)?;
        let rest_pose = base_pose(&template.model, &template.state);
        Ok(Self {
            sim: template.clone(),
            template,
            episode: Episode::new(config, rest_pose.z),
            rest_pose,
            pose: rest_pose,
        })
    }

    /// Platform pose of the undeformed robot; its height is `z_g`.
    pub fn rest_pose(&self) -> BasePose {
        self.rest_pose
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    /// Test hook: applies a rigid rotation (about the platform centre) and
    /// translation to every node, then refreshes the pose.
    pub fn transform_robot(&mut self, rotation: &nalgebra::Matrix3<f64>, translation: Vec3) {
        let centre = self.pose.position();
        let mut state = self.sim.state.clone();
        for p in &mut state.positions {
            *p = rotation * (*p - centre) + centre + translation;
        }
        self.sim.reset_state(state);
        self.pose = base_pose(&self.sim.model, &self.sim.state);
    }
}

impl Environment for TripodEnv {
    fn reset(&mut self, seed: u64) -> Observation {
        self.sim = self.template.clone();
        self.pose = self.rest_pose;
        self.episode.start(seed);
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult, EnvError> {
        self.episode.check_action(action)?;
        let max = self.sim.cables.params.displacement_max;
        let command = CableCommand {
            displacements: action.iter().map(|&a| action_to_displacement(a, max)).collect(),
        };
        self.sim.set_command(command);
        let before = self.pose;
        let mut failed = false;
        for _ in 0..self.episode.config.control_substeps {
            if self.sim.step().is_err() {
                failed = true;
                break;
            }
        }
        if !failed {
            self.pose = base_pose(&self.sim.model, &self.sim.state);
        }
        let period = self.episode.config.control_substeps as f64 * self.sim.params.time_step;
        let velocity = [(self.pose.x - before.x) / period, (self.pose.y - before.y) / period];
        Ok(self.episode.finish_step(self.pose, velocity, self.rest_pose.z, failed))
    }

    fn observation(&self) -> Observation {
        Observation {
            pose: self.pose,
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
        let shift = Vec3::new(xy[0] - self.pose.x, xy[1] - self.pose.y, 0.0);
        self.transform_robot(&nalgebra::Matrix3::identity(), shift);
    }
}
