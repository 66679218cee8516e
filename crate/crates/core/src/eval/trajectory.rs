use serde::{Deserialize, Serialize};

use super::Controller;
use crate::env::{Environment, TruncationCause};
use crate::error::EnvError;

pub const TRAJECTORY_SCHEMA_VERSION: u32 = 1;

/// `count` evenly spaced points on a circle of `radius` about the origin,
/// from angle 0 to `arc_degrees`, counter-clockwise.
pub fn make_arc_waypoints(radius: f64, arc_degrees: f64, count: usize) -> Vec<[f64; 2]> {
    if count == 1 {
        return vec![[radius, 0.0]];
    }
    (0..count)
        .map(|k| {
            let t = (arc_degrees * k as f64 / (count - 1) as f64).to_radians();
            [radius * t.cos(), radius * t.sin()]
        })
        .collect()
}

fn point_to_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

/// Distance from `p` to the nearest point of the polyline through `path`.
pub fn point_to_polyline_distance(p: [f64; 2], path: &[[f64; 2]]) -> f64 {
    match path {
        [] => f64::INFINITY,
        [a] => (p[0] - a[0]).hypot(p[1] - a[1]),
        _ => path
            .windows(2)
            .map(|w| point_to_segment(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaperTrajectoryReference {
    pub deviation_mm: f64,
    pub steps: usize,
}

impl Default for PaperTrajectoryReference {
    fn default() -> Self {
        Self {
            deviation_mm: 19.0,
            steps: 694,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryReport {
    pub schema_version: u32,
    pub seed: u64,
    pub distance_threshold: f64,
    pub waypoints: Vec<[f64; 2]>,
    pub reached: Vec<bool>,
    /// Platform (x, y) after every step.
    pub positions: Vec<[f64; 2]>,
    /// Distance of each position to the reference polyline, mm.
    pub deviations: Vec<f64>,
    pub total_steps: usize,
    pub max_deviation: f64,
    pub rms_deviation: f64,
    /// Step at which the first waypoint was reached; the approach from the
    /// origin precedes it.
    pub first_reach_step: Option<usize>,
    /// Max and RMS over the steps after `first_reach_step`.
    pub tracking_max_deviation: Option<f64>,
    pub tracking_rms_deviation: Option<f64>,
    pub truncation: Option<TruncationCause>,
    pub paper_reference: PaperTrajectoryReference,
}

fn max_rms(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let max = xs.iter().copied().fold(0.0, f64::max);
    let rms = (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt();
    (max, rms)
}

impl TrajectoryReport {
    pub fn summary(&self) -> String {
        let reached = self.reached.iter().filter(|r| **r).count();
        let tracking = match (self.tracking_max_deviation, self.tracking_rms_deviation) {
            (Some(m), Some(r)) => format!("max {m:.3} mm, rms {r:.3} mm"),
            _ => "n/a".to_string(),
        };
        format!(
            "waypoints reached     {reached}/{}\n\
             total steps           {}   (reference {})\n\
             deviation, all steps  max {:.3} mm, rms {:.3} mm   (reference ~{} mm)\n\
             deviation on the arc  {tracking}",
            self.waypoints.len(),
            self.total_steps,
            self.paper_reference.steps,
            self.max_deviation,
            self.rms_deviation,
            self.paper_reference.deviation_mm
        )
    }
}

/// Starts from rest at the origin and presents the waypoints one at a time,
/// advancing when the agent is within the distance threshold. Any truncation
/// ends the run and leaves the remaining waypoints unreached.
pub fn run_trajectory<E: Environment, C: Controller>(
    env: &mut E,
    controller: &C,
    waypoints: &[[f64; 2]],
    seed: u64,
) -> Result<TrajectoryReport, EnvError> {
    assert!(!waypoints.is_empty(), "trajectory needs at least one waypoint");
    env.reset(seed);
    env.set_goal(waypoints[0]);
    let mut reached = vec![false; waypoints.len()];
    let mut positions = Vec::new();
    let mut deviations = Vec::new();
    let mut first_reach_step = None;
    let mut truncation = None;
    let mut active = 0;
    let mut obs = env.observation();
    while active < waypoints.len() {
        let r = env.step(&controller.act(&obs))?;
        let p = [r.observation.pose.x, r.observation.pose.y];
        positions.push(p);
        deviations.push(point_to_polyline_distance(p, waypoints));
        if r.terminated {
            reached[active] = true;
            first_reach_step.get_or_insert(positions.len());
            active += 1;
            if let Some(&next) = waypoints.get(active) {
                env.set_goal(next);
            }
            obs = env.observation();
        } else if r.truncated {
            truncation = r.info.truncation;
            break;
        } else {
            obs = r.observation;
        }
    }
    let (max_deviation, rms_deviation) = max_rms(&deviations);
    let tracking = first_reach_step
        .filter(|&s| s < deviations.len())
        .map(|s| max_rms(&deviations[s..]));
    Ok(TrajectoryReport {
        schema_version: TRAJECTORY_SCHEMA_VERSION,
        seed,
        distance_threshold: env.config().distance_threshold,
        waypoints: waypoints.to_vec(),
        reached,
        total_steps: positions.len(),
        positions,
        deviations,
        max_deviation,
        rms_deviation,
        first_reach_step,
        tracking_max_deviation: tracking.map(|t| t.0),
        tracking_rms_deviation: tracking.map(|t| t.1),
        truncation,
        paper_reference: PaperTrajectoryReference::default(),
    })
}
