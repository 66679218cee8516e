use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{BuildError, FormatError};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Linear spring between two nodes. Stiffness is in mN/mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spring {
    pub i: usize,
    pub j: usize,
    pub stiffness: f64,
    pub rest_length: f64,
}

/// The discretized elastic body: node lattice, spring topology and lumped masses.
///
/// Immutable after construction; simulations share it read-only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftBodyModel {
    pub rest_positions: Vec<Vec3>,
    /// kg
    pub node_masses: Vec<f64>,
    pub springs: Vec<Spring>,
    pub platform_node_ids: Vec<usize>,
    pub leg_tip_node_ids: Vec<Vec<usize>>,
    /// Centre node of every ring, per leg, ordered platform to tip.
    pub leg_axis_node_ids: Vec<Vec<usize>>,
    pub cable_waypoint_ids: Vec<Vec<usize>>,
    /// Nodes held at their rest position (empty for the free-standing robot).
    pub fixed_node_ids: Vec<usize>,
    pub total_mass: f64,
    /// Rayleigh coefficients: damping force `-(α·M + β·K)·v`.
    #[serde(default)]
    pub rayleigh_mass_damping: f64,
    #[serde(default)]
    pub rayleigh_stiffness_damping: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    schema_version: u32,
    model: SoftBodyModel,
}

impl SoftBodyModel {
    /// Model with the given masses and springs and no index sets. Used for
    /// small analytic systems.
    pub fn from_parts(rest_positions: Vec<Vec3>, node_masses: Vec<f64>, springs: Vec<Spring>) -> Self {
        let total_mass = node_masses.iter().sum();
        Self {
            rest_positions,
            node_masses,
            springs,
            platform_node_ids: Vec::new(),
            leg_tip_node_ids: Vec::new(),
            leg_axis_node_ids: Vec::new(),
            cable_waypoint_ids: Vec::new(),
            fixed_node_ids: Vec::new(),
            total_mass,
            rayleigh_mass_damping: 0.0,
            rayleigh_stiffness_damping: 0.0,
        }
    }

    pub fn with_damping(mut self, mass: f64, stiffness: f64) -> Self {
        self.rayleigh_mass_damping = mass;
        self.rayleigh_stiffness_damping = stiffness;
        self
    }

    pub fn with_fixed(mut self, fixed: Vec<usize>) -> Self {
        self.fixed_node_ids = fixed;
        self
    }

    pub fn node_count(&self) -> usize {
        self.rest_positions.len()
    }

    pub fn is_fixed_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.node_count()];
        for &i in &self.fixed_node_ids {
            mask[i] = true;
        }
        mask
    }

    /// Invariants every model must satisfy.
    pub fn validate(&self) -> Result<(), BuildError> {
        let n = self.node_count();
        if self.node_masses.len() != n {
            return Err(BuildError::Invariant(format!(
                "{} masses for {} nodes",
                self.node_masses.len(),
                n
            )));
        }
        if self.node_masses.iter().any(|m| !(*m > 0.0)) {
            return Err(BuildError::Invariant("node masses must be positive".into()));
        }
        let mass_sum: f64 = self.node_masses.iter().sum();
        if (mass_sum - self.total_mass).abs() > 1e-12 * self.total_mass.max(1.0) {
            return Err(BuildError::Invariant(format!(
                "node masses sum to {mass_sum}, expected {}",
                self.total_mass
            )));
        }
        for s in &self.springs {
            if s.i >= n || s.j >= n || s.i == s.j {
                return Err(BuildError::Invariant(format!("bad spring endpoints ({}, {})", s.i, s.j)));
            }
            let d = (self.rest_positions[s.i] - self.rest_positions[s.j]).norm();
            if d < 1e-9 {
                return Err(BuildError::Degenerate(format!(
                    "zero-length edge between nodes {} and {}",
                    s.i, s.j
                )));
            }
            if (d - s.rest_length).abs() > 1e-9 * d.max(1.0) {
                return Err(BuildError::Invariant(format!(
                    "spring ({}, {}) rest length {} differs from node distance {d}",
                    s.i, s.j, s.rest_length
                )));
            }
            if !(s.stiffness > 0.0 && s.stiffness.is_finite()) {
                return Err(BuildError::Invariant("spring stiffness must be positive".into()));
            }
        }
        let sets = std::iter::once(&self.platform_node_ids)
            .chain(&self.leg_tip_node_ids)
            .chain(&self.leg_axis_node_ids)
            .chain(&self.cable_waypoint_ids)
            .chain(std::iter::once(&self.fixed_node_ids));
        for set in sets {
            if let Some(&bad) = set.iter().find(|&&i| i >= n) {
                return Err(BuildError::Invariant(format!("node index {bad} out of range")));
            }
        }
        Ok(())
    }

    /// Full set of invariants for a generated robot or leg model.
    pub fn validate_built(&self, legs: usize) -> Result<(), BuildError> {
        self.validate()?;
        if !self.is_connected() {
            return Err(BuildError::Invariant("spring graph is not connected".into()));
        }
        if self.platform_node_ids.is_empty() {
            return Err(BuildError::Invariant("platform node set is empty".into()));
        }
        if self.leg_tip_node_ids.len() != legs || self.leg_tip_node_ids.iter().any(Vec::is_empty) {
            return Err(BuildError::Invariant("every leg needs a non-empty tip set".into()));
        }
        if self.cable_waypoint_ids.len() != 3 * legs {
            return Err(BuildError::Invariant(format!(
                "expected {} cables, found {}",
                3 * legs,
                self.cable_waypoint_ids.len()
            )));
        }
        for c in &self.cable_waypoint_ids {
            if c.len() < 2 || c.windows(2).any(|w| w[0] == w[1]) {
                return Err(BuildError::Invariant(
                    "cable needs at least two distinct consecutive waypoints".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return false;
        }
        let mut adj = vec![Vec::new(); n];
        for s in &self.springs {
            adj[s.i].push(s.j);
            adj[s.j].push(s.i);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    pub fn to_json(&self) -> Result<String, FormatError> {
        Ok(serde_json::to_string_pretty(&ModelDocument {
            schema_version: MODEL_SCHEMA_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.schema_version != MODEL_SCHEMA_VERSION {
            return Err(FormatError::Version {
                kind: "model",
                found: doc.schema_version,
                expected: MODEL_SCHEMA_VERSION,
            });
        }
        doc.model.validate()?;
        Ok(doc.model)
    }
}
