use super::EpisodeConfig;

/// `sgn` with `sgn(0) = 0`.
pub fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Distance to the goal with the goal height pinned at `goal_height`.
pub fn goal_distance(position: [f64; 3], goal: [f64; 2], goal_height: f64) -> f64 {
    let dx = goal[0] - position[0];
    let dy = goal[1] - position[1];
    let dz = goal_height - position[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// `20·(1 − ln(1+d)/ln(1+d_max))`
pub fn proximity_term(d: f64, d_max: f64) -> f64 {
    20.0 * (1.0 - (1.0 + d).ln() / (1.0 + d_max).ln())
}

/// Inputs to the per-step reward. Lengths in mm, angles in degrees,
/// velocities in mm/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardInputs {
    pub position: [f64; 3],
    pub roll: f64,
    pub pitch: f64,
    pub velocity: [f64; 2],
    pub goal: [f64; 2],
    pub goal_height: f64,
}

/// Proximity bonus, minus roll and pitch magnitudes, plus velocity toward the
/// goal along each axis.
pub fn compute_reward(inputs: &RewardInputs, config: &EpisodeConfig) -> f64 {
    let d = goal_distance(inputs.position, inputs.goal, inputs.goal_height);
    proximity_term(d, config.d_max) - inputs.roll.abs() - inputs.pitch.abs()
        + inputs.velocity[0] * sign0(inputs.goal[0] - inputs.position[0])
        + inputs.velocity[1] * sign0(inputs.goal[1] - inputs.position[1])
}
