//! Pulling cables threaded through the legs.
//!
//! A cable is a stiff unilateral servo: commanding a shortening `δ` sets its
//! free length to `rest_length − δ`, and any extension beyond that produces
//! tension `T = k·(ℓ − (ℓ₀ − δ))`. Routing through interior waypoints is
//! frictionless, so tension is uniform along the polyline.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::BuildError;
use crate::physics::{ForceField, Linearization, SimState, SoftBodyModel, Vec3, NEWTON};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CableParams {
    /// N/mm
    pub stiffness: f64,
    /// mm
    pub displacement_max: f64,
    /// mm/s
    pub rate_limit: f64,
}

impl Default for CableParams {
    fn default() -> Self {
        Self {
            stiffness: 50.0,
            displacement_max: 25.0,
            rate_limit: 40.0,
        }
    }
}

impl CableParams {
    pub fn validate(&self) -> Result<(), BuildError> {
        if !(self.stiffness > 0.0) {
            return Err(BuildError::param("cable.stiffness", "must be > 0"));
        }
        if !(self.displacement_max >= 0.0) {
            return Err(BuildError::param("cable.displacement_max", "must be >= 0"));
        }
        if !(self.rate_limit > 0.0) {
            return Err(BuildError::param("cable.rate_limit", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cable {
    pub waypoint_node_ids: Vec<usize>,
    /// mm
    pub rest_length: f64,
    /// Commanded shortening currently in effect, mm.
    pub displacement: f64,
    /// mN/mm
    pub stiffness: f64,
}

/// Target shortening per cable, mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CableCommand {
    pub displacements: Vec<f64>,
}

impl CableCommand {
    pub fn zeros(n: usize) -> Self {
        Self {
            displacements: vec![0.0; n],
        }
    }

    pub fn clamped(&self, max: f64) -> Self {
        Self {
            displacements: self.displacements.iter().map(|d| d.clamp(0.0, max)).collect(),
        }
    }
}

pub fn polyline_length(ids: &[usize], positions: &[Vec3]) -> f64 {
    ids.windows(2).map(|w| (positions[w[1]] - positions[w[0]]).norm()).sum()
}

/// Builds the model's cables (three per leg) with rest lengths measured on the
/// rest lattice.
pub fn route_cables(model: &SoftBodyModel, params: &CableParams) -> Result<Vec<Cable>, BuildError> {
    params.validate()?;
    if model.cable_waypoint_ids.len() != 3 * model.leg_tip_node_ids.len() {
        return Err(BuildError::Invariant(format!(
            "{} cables for {} legs",
            model.cable_waypoint_ids.len(),
            model.leg_tip_node_ids.len()
        )));
    }
    model
        .cable_waypoint_ids
        .iter()
        .map(|ids| {
            if ids.len() < 2 {
                return Err(BuildError::Degenerate("cable with fewer than two waypoints".into()));
            }
            let rest_length = polyline_length(ids, &model.rest_positions);
            if rest_length <= 0.0 {
                return Err(BuildError::Degenerate("zero-length cable".into()));
            }
            Ok(Cable {
                waypoint_node_ids: ids.clone(),
                rest_length,
                displacement: 0.0,
                stiffness: params.stiffness * NEWTON,
            })
        })
        .collect()
}

impl Cable {
    pub fn current_length(&self, state: &SimState) -> f64 {
        polyline_length(&self.waypoint_node_ids, &state.positions)
    }

    /// Tension in mN; never negative.
    pub fn tension(&self, state: &SimState) -> f64 {
        let free = self.rest_length - self.displacement;
        (self.stiffness * (self.current_length(state) - free)).max(0.0)
    }
}

/// Nodal forces of one cable as `(node, force)` pairs in mN. Interior
/// waypoints receive the sum of both adjacent segment pulls.
pub fn cable_forces(cable: &Cable, state: &SimState) -> Vec<(usize, Vec3)> {
    let t = cable.tension(state);
    let ids = &cable.waypoint_node_ids;
    let mut out: Vec<(usize, Vec3)> = ids.iter().map(|&i| (i, Vec3::zeros())).collect();
    if t == 0.0 {
        return out;
    }
    for (s, w) in ids.windows(2).enumerate() {
        let d = state.positions[w[1]] - state.positions[w[0]];
        let len = d.norm();
        if len == 0.0 {
            continue;
        }
        let pull = d * (t / len);
        out[s].1 += pull;
        out[s + 1].1 -= pull;
    }
    out
}

/// Moves each displacement toward its command by at most `rate_limit·h`,
/// then clamps to `[0, displacement_max]`.
pub fn apply_command(cables: &mut [Cable], command: &CableCommand, params: &CableParams, h: f64) {
    let step = params.rate_limit * h;
    for (cable, &target) in cables.iter_mut().zip(&command.displacements) {
        let target = target.clamp(0.0, params.displacement_max);
        let delta = (target - cable.displacement).clamp(-step, step);
        cable.displacement = (cable.displacement + delta).clamp(0.0, params.displacement_max);
    }
}

/// All cables of a simulation together with the command they are tracking.
#[derive(Debug, Clone, PartialEq)]
pub struct CableBank {
    pub cables: Vec<Cable>,
    pub command: CableCommand,
    pub params: CableParams,
}

impl CableBank {
    pub fn new(cables: Vec<Cable>, params: CableParams) -> Self {
        let n = cables.len();
        Self {
            cables,
            command: CableCommand::zeros(n),
            params,
        }
    }

    pub fn set_command(&mut self, command: CableCommand) {
        self.command = command.clamped(self.params.displacement_max);
    }

    /// Advance the slew-limited displacements by one physics step.
    pub fn advance(&mut self, h: f64) {
        apply_command(&mut self.cables, &self.command, &self.params, h);
    }

    pub fn reset(&mut self) {
        for c in &mut self.cables {
            c.displacement = 0.0;
        }
        self.command = CableCommand::zeros(self.cables.len());
    }

    pub fn displacements(&self) -> Vec<f64> {
        self.cables.iter().map(|c| c.displacement).collect()
    }
}

impl ForceField for CableBank {
    fn accumulate(&self, state: &SimState, forces: &mut [Vec3]) {
        for cable in &self.cables {
            for (i, f) in cable_forces(cable, state) {
                forces[i] += f;
            }
        }
    }

    fn linearize(&self, state: &SimState, lin: &mut Linearization) {
        for cable in &self.cables {
            let t = cable.tension(state);
            if t == 0.0 {
                continue;
            }
            let ids = &cable.waypoint_node_ids;
            let mut grad: Vec<(usize, Vec3)> = ids.iter().map(|&i| (i, Vec3::zeros())).collect();
            for (s, w) in ids.windows(2).enumerate() {
                let d = state.positions[w[1]] - state.positions[w[0]];
                let len = d.norm();
                if len == 0.0 {
                    continue;
                }
                let u = d / len;
                grad[s].1 -= u;
                grad[s + 1].1 += u;
                let transverse = (Matrix3::identity() - u * u.transpose()) * (t / len);
                lin.pair_stiffness.push((w[0], w[1], transverse));
            }
            lin.rank_one_stiffness.push((cable.stiffness, grad));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{build_leg_model, build_robot_model, MaterialParams, RobotGeometry, Spring};
    use proptest::prelude::*;

    fn robot() -> SoftBodyModel {
        build_robot_model(&RobotGeometry::default(), &MaterialParams::default(), 0.5).unwrap()
    }

    fn straight(stiffness: f64) -> (Cable, SimState) {
        let model = SoftBodyModel::from_parts(
            vec![Vec3::zeros(), Vec3::new(0.0, 0.0, 20.0)],
            vec![0.1, 0.1],
            vec![Spring { i: 0, j: 1, stiffness: 1.0, rest_length: 20.0 }],
        );
        let cable = Cable {
            waypoint_node_ids: vec![0, 1],
            rest_length: 20.0,
            displacement: 0.0,
            stiffness,
        };
        (cable, SimState::at_rest(&model))
    }

    #[test]
    fn nine_cables_three_per_leg() {
        let model = robot();
        let cables = route_cables(&model, &CableParams::default()).unwrap();
        assert_eq!(cables.len(), 9);
        for (leg, axis) in model.leg_axis_node_ids.iter().enumerate() {
            for c in &cables[3 * leg..3 * leg + 3] {
                assert_eq!(c.waypoint_node_ids.len(), axis.len());
            }
        }
    }

    #[test]
    fn rest_lengths_match_rest_state() {
        let model = robot();
        let state = SimState::at_rest(&model);
        for c in route_cables(&model, &CableParams::default()).unwrap() {
            assert!((c.current_length(&state) - c.rest_length).abs() < 1e-9);
            assert!(cable_forces(&c, &state).iter().all(|(_, f)| *f == Vec3::zeros()));
        }
    }

    #[test]
    fn cable_anchors_sit_120_degrees_apart() {
        let model = robot();
        for leg in 0..3 {
            let centre = model.rest_positions[model.leg_axis_node_ids[leg][0]];
            let angles: Vec<f64> = (0..3)
                .map(|k| {
                    let p = model.rest_positions[model.cable_waypoint_ids[3 * leg + k][0]] - centre;
                    p.y.atan2(p.x).to_degrees()
                })
                .collect();
            for k in 0..3 {
                let d = (angles[(k + 1) % 3] - angles[k]).rem_euclid(360.0);
                assert!((d - 120.0).abs() < 1.0, "leg {leg}: {angles:?}");
            }
        }
    }

    #[test]
    fn shortened_straight_cable_pulls_ends_together() {
        // k = 50 N/mm, δ = 0.3 mm -> 15 N = 15000 mN.
        let (mut cable, state) = straight(50.0 * NEWTON);
        cable.displacement = 0.3;
        let f = cable_forces(&cable, &state);
        assert!((f[0].1 - Vec3::new(0.0, 0.0, 15000.0)).norm() < 1e-9);
        assert!((f[1].1 + f[0].1).norm() < 1e-12);
    }

    #[test]
    fn slack_cable_never_pushes() {
        let (cable, mut state) = straight(1000.0);
        state.positions[1].z = 15.0;
        assert_eq!(cable.tension(&state), 0.0);
    }

    #[test]
    fn command_is_slew_limited_and_clamped() {
        let model = robot();
        let params = CableParams { rate_limit: 200.0, ..CableParams::default() };
        let mut cables = route_cables(&model, &params).unwrap();
        let mut cmd = CableCommand::zeros(9);
        cmd.displacements[0] = 10.0;
        cmd.displacements[1] = 100.0;
        apply_command(&mut cables, &cmd, &params, 0.01);
        assert!((cables[0].displacement - 2.0).abs() < 1e-12);
        for _ in 0..100 {
            apply_command(&mut cables, &cmd, &params, 0.01);
        }
        assert_eq!(cables[1].displacement, params.displacement_max);
        let before: Vec<f64> = cables.iter().map(|c| c.displacement).collect();
        let same = CableCommand { displacements: before.clone() };
        apply_command(&mut cables, &same, &params, 0.01);
        assert_eq!(before, cables.iter().map(|c| c.displacement).collect::<Vec<_>>());
    }

    fn perturbed_leg(seed: u64) -> (SoftBodyModel, SimState) {
        use rand::{Rng, SeedableRng};
        let model = build_leg_model(&RobotGeometry::default(), &MaterialParams::default(), 0.1).unwrap();
        let mut state = SimState::at_rest(&model);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for p in &mut state.positions {
            *p += Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        (model, state)
    }

    proptest! {
        #[test]
        fn cable_forces_have_no_net_force_or_torque(seed in 0u64..1000, disp in 0.0f64..25.0) {
            let (model, state) = perturbed_leg(seed);
            let mut cables = route_cables(&model, &CableParams::default()).unwrap();
            for c in &mut cables {
                c.displacement = disp;
                let f = cable_forces(c, &state);
                prop_assert!(f.iter().all(|(_, v)| v.iter().all(|x| x.is_finite())));
                let net: Vec3 = f.iter().map(|(_, v)| *v).sum();
                let torque: Vec3 = f.iter().map(|(i, v)| state.positions[*i].cross(v)).sum();
                let scale = c.tension(&state).max(1.0) * 100.0;
                prop_assert!(net.norm() <= 1e-9 * scale);
                prop_assert!(torque.norm() <= 1e-9 * scale * 100.0);
            }
        }

        #[test]
        fn tension_is_monotone_in_displacement(d1 in 0.0f64..25.0, d2 in 0.0f64..25.0) {
            let model = robot();
            let state = SimState::at_rest(&model);
            let mut cables = route_cables(&model, &CableParams::default()).unwrap();
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            cables[4].displacement = lo;
            let t_lo = cables[4].tension(&state);
            cables[4].displacement = hi;
            let t_hi = cables[4].tension(&state);
            prop_assert!(t_lo >= 0.0);
            prop_assert!(t_hi >= t_lo);
        }
    }
}
