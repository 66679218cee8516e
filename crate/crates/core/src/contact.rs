//! Penalty contact against a horizontal floor with regularized Coulomb friction.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::BuildError;
use crate::physics::{ForceField, Linearization, SimState, Vec3, NEWTON};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContactParams {
    /// mm; nodes closer than this to the floor are tracked.
    pub alarm_distance: f64,
    /// mm; height at which the normal response starts.
    pub contact_distance: f64,
    pub friction_coef: f64,
    /// N/mm
    pub normal_stiffness: f64,
    /// mm/s; below this sliding speed friction is viscous.
    pub tangential_regularization_velocity: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            alarm_distance: 5.0,
            contact_distance: 1.0,
            friction_coef: 0.8,
            normal_stiffness: 20.0,
            tangential_regularization_velocity: 1.0,
        }
    }
}

impl ContactParams {
    pub fn validate(&self) -> Result<(), BuildError> {
        if !(self.contact_distance >= 0.0) {
            return Err(BuildError::param("contact.contact_distance", "must be >= 0"));
        }
        if !(self.alarm_distance > self.contact_distance) {
            return Err(BuildError::param(
                "contact.alarm_distance",
                "must exceed contact_distance",
            ));
        }
        if !(self.friction_coef >= 0.0) {
            return Err(BuildError::param("contact.friction_coef", "must be >= 0"));
        }
        if !(self.normal_stiffness > 0.0) {
            return Err(BuildError::param("contact.normal_stiffness", "must be > 0"));
        }
        if !(self.tangential_regularization_velocity > 0.0) {
            return Err(BuildError::param(
                "contact.tangential_regularization_velocity",
                "must be > 0",
            ));
        }
        Ok(())
    }

    pub fn stiffness_internal(&self) -> f64 {
        self.normal_stiffness * NEWTON
    }
}

/// A node inside the alarm band. `gap` is the height above the floor minus
/// `contact_distance`; negative means penetration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPoint {
    pub node: usize,
    pub gap: f64,
}

pub fn detect_contacts(state: &SimState, plane_height: f64, params: &ContactParams) -> Vec<ContactPoint> {
    state
        .positions
        .iter()
        .enumerate()
        .filter_map(|(node, p)| {
            let height = p.z - plane_height;
            (height < params.alarm_distance).then_some(ContactPoint {
                node,
                gap: height - params.contact_distance,
            })
        })
        .collect()
}

/// Normal force magnitude (mN) for a contact.
pub fn normal_force(gap: f64, params: &ContactParams) -> f64 {
    params.stiffness_internal() * (-gap).max(0.0)
}

/// Viscous coefficient (mN·s/mm) of the regularized friction law at the given
/// tangential speed: the force is `−c·v_t`, so its magnitude is
/// `min(μN, μN·|v_t|/v_reg)`.
fn friction_coefficient(normal: f64, tangential_speed: f64, params: &ContactParams) -> f64 {
    params.friction_coef * normal / tangential_speed.max(params.tangential_regularization_velocity)
}

fn tangential(v: &Vec3) -> Vec3 {
    Vec3::new(v.x, v.y, 0.0)
}

/// Contact forces (mN) for the given contacts as `(node, force)` pairs.
pub fn contact_forces(contacts: &[ContactPoint], state: &SimState, params: &ContactParams) -> Vec<(usize, Vec3)> {
    contacts
        .iter()
        .filter(|c| c.gap < 0.0)
        .map(|c| {
            let n = normal_force(c.gap, params);
            let vt = tangential(&state.velocities[c.node]);
            let coef = friction_coefficient(n, vt.norm(), params);
            (c.node, Vec3::new(0.0, 0.0, n) - vt * coef)
        })
        .collect()
}

/// Floor at `plane_height` as a force field for the integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundContact {
    pub plane_height: f64,
    pub params: ContactParams,
}

impl ForceField for GroundContact {
    fn accumulate(&self, state: &SimState, forces: &mut [Vec3]) {
        let contacts = detect_contacts(state, self.plane_height, &self.params);
        for (i, f) in contact_forces(&contacts, state, &self.params) {
            forces[i] += f;
        }
    }

    fn linearize(&self, state: &SimState, lin: &mut Linearization) {
        let k = self.params.stiffness_internal();
        for c in detect_contacts(state, self.plane_height, &self.params) {
            if c.gap >= 0.0 {
                continue;
            }
            let mut kn = Matrix3::zeros();
            kn[(2, 2)] = k;
            lin.node_stiffness.push((c.node, kn));
            // Friction is treated as linear damping with the coefficient
            // frozen at the start-of-step velocity.
            let vt = tangential(&state.velocities[c.node]);
            let coef = friction_coefficient(normal_force(c.gap, &self.params), vt.norm(), &self.params);
            let mut d = Matrix3::zeros();
            d[(0, 0)] = coef;
            d[(1, 1)] = coef;
            lin.node_damping.push((c.node, d));
        }
    }
}
