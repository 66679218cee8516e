//! A running simulation: model, mechanical state, cables and floor.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cable::{route_cables, CableBank, CableCommand, CableParams};
use crate::contact::{ContactParams, GroundContact};
use crate::error::{BuildError, FormatError, PhysicsError};
use crate::physics::{
    build_leg_model, build_robot_model, step_implicit_euler_cached, ForceField, Linearization, MaterialParams,
    RobotGeometry, SceneParams, SimState, SoftBodyModel, StepReport, StepWorkspace, Vec3,
};

/// Everything needed to build a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub material: MaterialParams,
    pub scene: SceneParams,
    pub geometry: RobotGeometry,
    pub cable: CableParams,
    pub contact: ContactParams,
    /// kg; when absent the mass is density × lattice volume.
    pub total_mass: Option<f64>,
    /// kg, single-leg scene.
    pub leg_mass: Option<f64>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            material: MaterialParams::default(),
            scene: SceneParams::default(),
            geometry: RobotGeometry::default(),
            cable: CableParams::default(),
            contact: ContactParams::default(),
            total_mass: Some(0.5),
            leg_mass: None,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), BuildError> {
        self.material.validate()?;
        self.scene.validate()?;
        self.geometry.validate()?;
        self.cable.validate()?;
        self.contact.validate()
    }

    fn leg_volume(&self) -> f64 {
        std::f64::consts::PI * self.geometry.leg_radius.powi(2) * self.geometry.leg_length
    }

    /// kg
    pub fn robot_mass(&self) -> f64 {
        self.total_mass.unwrap_or_else(|| {
            let g = &self.geometry;
            let platform = std::f64::consts::PI * g.platform_radius.powi(2) * g.platform_thickness;
            (3.0 * self.leg_volume() + platform) * 1e-9 * self.material.density
        })
    }

    /// kg
    pub fn single_leg_mass(&self) -> f64 {
        self.leg_mass
            .unwrap_or_else(|| self.leg_volume() * 1e-9 * self.material.density)
    }
}

pub const ROBOT_SCHEMA_VERSION: u32 = 1;

/// Versioned dump of a built model together with its cable limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotDocument {
    pub schema_version: u32,
    pub model: SoftBodyModel,
    pub cable: CableParams,
}

impl RobotDocument {
    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        let doc: RobotDocument = serde_json::from_str(text)?;
        if doc.schema_version != ROBOT_SCHEMA_VERSION {
            return Err(FormatError::Version {
                kind: "robot model",
                found: doc.schema_version,
                expected: ROBOT_SCHEMA_VERSION,
            });
        }
        doc.model.validate()?;
        Ok(doc)
    }
}

impl<F: ForceField> ForceField for Option<F> {
    fn accumulate(&self, state: &SimState, forces: &mut [Vec3]) {
        if let Some(f) = self {
            f.accumulate(state, forces)
        }
    }
    fn linearize(&self, state: &SimState, lin: &mut Linearization) {
        if let Some(f) = self {
            f.linearize(state, lin)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub model: Arc<SoftBodyModel>,
    pub state: SimState,
    pub params: SceneParams,
    pub cables: CableBank,
    pub ground: Option<GroundContact>,
    workspace: StepWorkspace,
}

impl Simulation {
    /// Free-standing robot on the floor at z = 0. The rest lattice is lifted
    /// by `contact_distance` so the tips start exactly at the contact surface.
    pub fn robot(config: &SceneConfig) -> Result<Self, BuildError> {
        config.validate()?;
        let mut model = build_robot_model(&config.geometry, &config.material, config.robot_mass())?;
        let lift = config.contact.contact_distance;
        for p in &mut model.rest_positions {
            p.z += lift;
        }
        let cables = route_cables(&model, &config.cable)?;
        let model = Arc::new(model);
        Ok(Self {
            state: SimState::at_rest(&model),
            model,
            params: config.scene.clone(),
            cables: CableBank::new(cables, config.cable.clone()),
            ground: Some(GroundContact {
                plane_height: 0.0,
                params: config.contact.clone(),
            }),
            workspace: StepWorkspace::default(),
        })
    }

    /// Single leg hanging from its fixed mounting ring, no floor.
    pub fn leg(config: &SceneConfig) -> Result<Self, BuildError> {
        config.validate()?;
        let model = build_leg_model(&config.geometry, &config.material, config.single_leg_mass())?;
        let cables = route_cables(&model, &config.cable)?;
        let model = Arc::new(model);
        Ok(Self {
            state: SimState::at_rest(&model),
            model,
            params: config.scene.clone(),
            cables: CableBank::new(cables, config.cable.clone()),
            ground: None,
            workspace: StepWorkspace::default(),
        })
    }

    pub fn set_command(&mut self, command: CableCommand) {
        self.cables.set_command(command);
    }

    pub fn step(&mut self) -> Result<StepReport, PhysicsError> {
        self.cables.advance(self.params.time_step);
        let fields = (&self.cables, &self.ground);
        let (next, report) =
            step_implicit_euler_cached(&self.model, &self.state, &self.params, &fields, &mut self.workspace)?;
        self.state = next;
        Ok(report)
    }

    /// Replaces the mechanical state and drops cached solver work, so the
    /// trajectory from here depends only on `state` and the cable bank.
    pub fn reset_state(&mut self, state: SimState) {
        self.state = state;
        self.workspace.clear();
    }

    pub fn run(&mut self, steps: usize) -> Result<(), PhysicsError> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    pub fn document(&self) -> RobotDocument {
        RobotDocument {
            schema_version: ROBOT_SCHEMA_VERSION,
            model: (*self.model).clone(),
            cable: self.cables.params.clone(),
        }
    }

    /// Centroid of the leg's tip ring.
    pub fn tip_position(&self, leg: usize) -> Vec3 {
        self.state.centroid(&self.model.leg_tip_node_ids[leg])
    }
}
