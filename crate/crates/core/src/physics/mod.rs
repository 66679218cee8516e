//! Deformable-body dynamics for the tripod robot.
//!
//! Units are millimetres, kilograms and seconds throughout, which makes the
//! derived force unit kg·mm/s², i.e. millinewtons. Configuration surfaces that
//! are naturally stated in newtons or pascals are converted with
//! [`NEWTON`] and [`PASCAL`] at model-build time.
//!
//! Elasticity is a mass-spring lattice rather than tetrahedral FEM. Each
//! lattice cell (a wedge or hexahedral sector of a cylinder) is fully
//! cross-braced: every pair of its nodes is joined by a spring. The cell's
//! volume is shared among its edges and an edge of length `L` receives
//!
//! ```text
//! k += E · V_cell · w_edge / (Σ_cell w · L²)
//! ```
//!
//! which reduces to the bar stiffness `E·A/L` for a single-edge cell. Edges
//! along a lattice axis get `w = 1`; diagonal braces get `w = 1/(1+ν)`, the
//! shear-to-Young ratio `2G/E`. This is the only place the Poisson ratio
//! enters, so the model reproduces stiffness scaling with `E` but not true
//! volumetric (in)compressibility.

mod cg;
mod forces;
mod integrator;
mod lattice;
mod model;
mod pose;
mod sparse;

pub use cg::{solve_cg, solve_pcg, solve_preconditioned, CgSolution};
pub use forces::{assemble_forces, spring_force, spring_stiffness_block};
pub use integrator::{
    step_implicit_euler, step_implicit_euler_cached, ForceField, Linearization, NoExternalForces, StepReport,
    StepWorkspace,
};
pub use lattice::{bar_stiffness, build_leg_model, build_robot_model, cell_edge_stiffness};
pub use model::{SoftBodyModel, Spring, MODEL_SCHEMA_VERSION};
pub use pose::{base_pose, euler_zyx_to_rotation, rotation_to_euler_zyx, BasePose};
pub use sparse::{BlockMatrix, EnvelopeCholesky};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{BuildError, PhysicsError};

pub type Vec3 = Vector3<f64>;

/// One newton in internal force units (mN).
pub const NEWTON: f64 = 1.0e3;
/// One pascal in internal pressure units (mN/mm²).
pub const PASCAL: f64 = 1.0e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaterialParams {
    /// Pa
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    /// kg/m³
    pub density: f64,
    /// 1/s
    pub rayleigh_mass_damping: f64,
    /// s
    pub rayleigh_stiffness_damping: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            young_modulus: 3.5e6,
            poisson_ratio: 0.45,
            density: 1210.0,
            rayleigh_mass_damping: 0.1,
            rayleigh_stiffness_damping: 0.01,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<(), BuildError> {
        if !(self.young_modulus > 0.0 && self.young_modulus.is_finite()) {
            return Err(BuildError::param("young_modulus", "must be > 0"));
        }
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            return Err(BuildError::param("poisson_ratio", "must be in [0, 0.5)"));
        }
        if !(self.density > 0.0) {
            return Err(BuildError::param("density", "must be > 0"));
        }
        if !(self.rayleigh_mass_damping >= 0.0) {
            return Err(BuildError::param("rayleigh_mass_damping", "must be >= 0"));
        }
        if !(self.rayleigh_stiffness_damping >= 0.0) {
            return Err(BuildError::param("rayleigh_stiffness_damping", "must be >= 0"));
        }
        Ok(())
    }

    /// Young's modulus in internal units (mN/mm²).
    pub fn young_internal(&self) -> f64 {
        self.young_modulus * PASCAL
    }

    /// Weight of a diagonal brace relative to an axis-aligned lattice edge.
    pub fn brace_weight(&self) -> f64 {
        1.0 / (1.0 + self.poisson_ratio)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneParams {
    /// mm/s²
    pub gravity: [f64; 3],
    /// s
    pub time_step: f64,
    pub cg_tolerance: f64,
    pub cg_max_iterations: usize,
    pub preconditioner: Preconditioner,
}

/// CG preconditioner for the implicit step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    /// Inverse diagonal.
    Jacobi,
    /// Sparse Cholesky factor of the step matrix itself.
    #[default]
    Cholesky,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            gravity: [0.0, 0.0, -9810.0],
            time_step: 0.01,
            cg_tolerance: 1e-6,
            cg_max_iterations: 200,
            preconditioner: Preconditioner::Cholesky,
        }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<(), BuildError> {
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return Err(BuildError::param("time_step", "must be > 0"));
        }
        if !(self.cg_tolerance > 0.0) {
            return Err(BuildError::param("cg_tolerance", "must be > 0"));
        }
        if self.cg_max_iterations < 1 {
            return Err(BuildError::param("cg_max_iterations", "must be >= 1"));
        }
        if self.gravity.iter().any(|g| !g.is_finite()) {
            return Err(BuildError::param("gravity", "must be finite"));
        }
        Ok(())
    }

    pub fn gravity_vec(&self) -> Vec3 {
        Vec3::from(self.gravity)
    }
}

/// Lattice counts for one cylinder: rings along the axis, node layers along the
/// radius, and nodes around the circumference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeResolution {
    pub axial: usize,
    pub radial: usize,
    pub circumferential: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotGeometry {
    pub leg_length: f64,
    pub leg_radius: f64,
    pub leg_count: usize,
    /// degrees
    pub leg_mount_angle_spacing: f64,
    pub platform_radius: f64,
    pub platform_thickness: f64,
    pub lattice_resolution: LatticeResolution,
    /// Nodes around the platform disc.
    pub platform_circumferential: usize,
    /// Radial node layers in the platform disc.
    pub platform_radial: usize,
}

impl Default for RobotGeometry {
    fn default() -> Self {
        Self {
            leg_length: 80.0,
            leg_radius: 12.0,
            leg_count: 3,
            leg_mount_angle_spacing: 120.0,
            platform_radius: 45.0,
            platform_thickness: 10.0,
            lattice_resolution: LatticeResolution {
                axial: 4,
                radial: 1,
                circumferential: 6,
            },
            platform_circumferential: 12,
            platform_radial: 1,
        }
    }
}

impl RobotGeometry {
    pub fn validate(&self) -> Result<(), BuildError> {
        let positive = [
            ("leg_length", self.leg_length),
            ("leg_radius", self.leg_radius),
            ("platform_radius", self.platform_radius),
            ("platform_thickness", self.platform_thickness),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BuildError::param(name, format!("must be > 0, got {v}")));
            }
        }
        if self.leg_count != 3 {
            return Err(BuildError::param("leg_count", "the robot has exactly 3 legs"));
        }
        if (self.leg_mount_angle_spacing - 120.0).abs() > 1e-12 {
            return Err(BuildError::param(
                "leg_mount_angle_spacing",
                "legs are mounted at exactly 120 degrees",
            ));
        }
        let res = self.lattice_resolution;
        if res.axial < 2 {
            return Err(BuildError::param(
                "lattice_resolution.axial",
                "at least 2 axial rings per leg are required",
            ));
        }
        if res.radial < 1 {
            return Err(BuildError::param("lattice_resolution.radial", "must be >= 1"));
        }
        if res.circumferential < 3 || !res.circumferential.is_multiple_of(3) {
            return Err(BuildError::param(
                "lattice_resolution.circumferential",
                "must be a positive multiple of 3 so three cables sit 120 degrees apart",
            ));
        }
        if self.platform_circumferential < 3 || !self.platform_circumferential.is_multiple_of(3) {
            return Err(BuildError::param(
                "platform_circumferential",
                "must be a positive multiple of 3",
            ));
        }
        if self.platform_radial < 1 {
            return Err(BuildError::param("platform_radial", "must be >= 1"));
        }
        if self.leg_radius >= self.platform_radius {
            return Err(BuildError::param(
                "leg_radius",
                "legs must fit under the platform (leg_radius < platform_radius)",
            ));
        }
        Ok(())
    }

    /// Radius of the circle on which leg axes are mounted.
    pub fn mount_radius(&self) -> f64 {
        self.platform_radius - self.leg_radius
    }
}

/// Node positions and velocities plus the simulation clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub time: f64,
}

impl SimState {
    pub fn at_rest(model: &SoftBodyModel) -> Self {
        Self {
            positions: model.rest_positions.clone(),
            velocities: vec![Vec3::zeros(); model.node_count()],
            time: 0.0,
        }
    }

    pub fn check(&self, node_count: usize) -> Result<(), PhysicsError> {
        if self.positions.len() != node_count {
            return Err(PhysicsError::LengthMismatch {
                what: "positions",
                expected: node_count,
                actual: self.positions.len(),
            });
        }
        if self.velocities.len() != node_count {
            return Err(PhysicsError::LengthMismatch {
                what: "velocities",
                expected: node_count,
                actual: self.velocities.len(),
            });
        }
        if !self.time.is_finite()
            || self
                .positions
                .iter()
                .chain(&self.velocities)
                .any(|v| !v.iter().all(|c| c.is_finite()))
        {
            return Err(PhysicsError::NonFinite("state"));
        }
        Ok(())
    }

    pub fn kinetic_energy(&self, model: &SoftBodyModel) -> f64 {
        self.velocities
            .iter()
            .zip(&model.node_masses)
            .map(|(v, m)| 0.5 * m * v.norm_squared())
            .sum()
    }

    pub fn momentum(&self, model: &SoftBodyModel) -> Vec3 {
        self.velocities
            .iter()
            .zip(&model.node_masses)
            .map(|(v, m)| v * *m)
            .sum()
    }

    pub fn centroid(&self, ids: &[usize]) -> Vec3 {
        ids.iter().map(|&i| self.positions[i]).sum::<Vec3>() / ids.len() as f64
    }
}
