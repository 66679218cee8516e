use nalgebra::Matrix3;

use super::model::{SoftBodyModel, Spring};
use super::{SimState, Vec3};
use crate::error::PhysicsError;

/// Elastic force on endpoint `i` of `spring` (endpoint `j` receives the negation).
pub fn spring_force(spring: &Spring, xi: &Vec3, xj: &Vec3) -> Vec3 {
    let d = xj - xi;
    let len = d.norm();
    if len == 0.0 {
        return Vec3::zeros();
    }
    d * (spring.stiffness * (len - spring.rest_length) / len)
}

/// Positive semi-definite stiffness block `-∂f_i/∂x_i` of one spring.
///
/// The transverse (geometric) term is dropped under compression so the
/// assembled operator stays positive semi-definite.
pub fn spring_stiffness_block(spring: &Spring, xi: &Vec3, xj: &Vec3) -> Matrix3<f64> {
    let d = xj - xi;
    let len = d.norm();
    if len == 0.0 {
        return Matrix3::identity() * spring.stiffness;
    }
    let u = d / len;
    let uu = u * u.transpose();
    let transverse = (1.0 - spring.rest_length / len).max(0.0);
    (uu + (Matrix3::identity() - uu) * transverse) * spring.stiffness
}

/// Total nodal force: gravity, spring elasticity, Rayleigh damping and the
/// caller's external forces (cables, contact), in mN.
pub fn assemble_forces(
    model: &SoftBodyModel,
    state: &SimState,
    gravity: &Vec3,
    external: &[Vec3],
) -> Result<Vec<Vec3>, PhysicsError> {
    let n = model.node_count();
    state.check(n)?;
    if external.len() != n {
        return Err(PhysicsError::LengthMismatch {
            what: "external forces",
            expected: n,
            actual: external.len(),
        });
    }
    let alpha = model.rayleigh_mass_damping;
    let beta = model.rayleigh_stiffness_damping;
    let mut f: Vec<Vec3> = model
        .node_masses
        .iter()
        .zip(&state.velocities)
        .zip(external)
        .map(|((m, v), e)| gravity * *m - v * (alpha * m) + e)
        .collect();
    for s in &model.springs {
        let (xi, xj) = (&state.positions[s.i], &state.positions[s.j]);
        let mut fi = spring_force(s, xi, xj);
        if beta > 0.0 {
            let dv = state.velocities[s.i] - state.velocities[s.j];
            fi -= spring_stiffness_block(s, xi, xj) * dv * beta;
        }
        f[s.i] += fi;
        f[s.j] -= fi;
    }
    if f.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
        return Err(PhysicsError::NonFinite("forces"));
    }
    Ok(f)
}
