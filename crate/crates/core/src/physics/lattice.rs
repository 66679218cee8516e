//! Procedural lattice generation for the leg and full-robot scenes.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::model::{SoftBodyModel, Spring};
use super::{LatticeResolution, MaterialParams, RobotGeometry, Vec3};
use crate::error::BuildError;

/// Axial bar stiffness `E·A/L`.
pub fn bar_stiffness(young: f64, area: f64, length: f64) -> f64 {
    young * area / length
}

/// Share of a cell's stiffness received by one of its edges.
pub fn cell_edge_stiffness(young: f64, cell_volume: f64, edge_weight: f64, total_weight: f64, length: f64) -> f64 {
    young * cell_volume * edge_weight / (total_weight * length * length)
}

/// Lattice coordinate of a node inside one cylinder: ring along the axis,
/// radial layer (0 is the axis itself) and angular slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Slot {
    cylinder: usize,
    ring: usize,
    layer: usize,
    angle: usize,
}

fn is_axis_edge(a: Slot, b: Slot, circ: usize) -> bool {
    if a.cylinder != b.cylinder {
        return false;
    }
    let same_angle = a.layer == 0 || b.layer == 0 || a.angle == b.angle;
    if a.ring != b.ring {
        return a.ring.abs_diff(b.ring) == 1 && a.layer == b.layer && (a.layer == 0 || a.angle == b.angle);
    }
    if a.layer != b.layer {
        return a.layer.abs_diff(b.layer) == 1 && same_angle;
    }
    let d = a.angle.abs_diff(b.angle);
    a.layer > 0 && (d == 1 || d == circ - 1)
}

struct Cylinder {
    /// `rings[a][0]` is the centre node; layer `k ≥ 1`, slot `j` is at `1 + (k-1)·circ + j`.
    rings: Vec<Vec<usize>>,
    circ: usize,
}

impl Cylinder {
    fn node(&self, ring: usize, layer: usize, angle: usize) -> usize {
        if layer == 0 {
            self.rings[ring][0]
        } else {
            self.rings[ring][1 + (layer - 1) * self.circ + angle % self.circ]
        }
    }

    fn centres(&self) -> Vec<usize> {
        self.rings.iter().map(|r| r[0]).collect()
    }
}

#[derive(Default)]
struct LatticeBuilder {
    positions: Vec<Vec3>,
    slots: Vec<Vec<Slot>>,
    /// Accumulated stiffness per undirected edge.
    edges: BTreeMap<(usize, usize), f64>,
    cylinders: usize,
}

impl LatticeBuilder {
    fn find_node(&self, p: &Vec3) -> Option<usize> {
        self.positions.iter().position(|q| (q - p).norm() < 1e-6)
    }

    fn add_node(&mut self, p: Vec3, slot: Slot, merge: bool) -> usize {
        if merge {
            if let Some(i) = self.find_node(&p) {
                self.slots[i].push(slot);
                return i;
            }
        }
        self.positions.push(p);
        self.slots.push(vec![slot]);
        self.positions.len() - 1
    }

    fn add_edge_stiffness(&mut self, i: usize, j: usize, k: f64) {
        let key = (i.min(j), i.max(j));
        *self.edges.entry(key).or_insert(0.0) += k;
    }

    fn slot_in(&self, node: usize, cylinder: usize) -> Slot {
        *self.slots[node]
            .iter()
            .find(|s| s.cylinder == cylinder)
            .expect("node belongs to cylinder")
    }

    /// Adds a solid cylinder whose first ring is centred at `origin` and whose
    /// rings advance along `axis` (unit). Slot 0 on every layer points along
    /// `angle0` in the xy-plane.
    #[allow(clippy::too_many_arguments)]
    fn add_cylinder(
        &mut self,
        origin: Vec3,
        axis: Vec3,
        length: f64,
        radius: f64,
        res: LatticeResolution,
        angle0: f64,
        merge_first_ring: bool,
        material: &MaterialParams,
    ) -> Result<Cylinder, BuildError> {
        let cyl = self.cylinders;
        self.cylinders += 1;
        let circ = res.circumferential;
        let mut rings = Vec::with_capacity(res.axial);
        for a in 0..res.axial {
            let centre = origin + axis * (length * a as f64 / (res.axial - 1) as f64);
            let merge = merge_first_ring && a == 0;
            let mut ring = vec![self.add_node(centre, Slot { cylinder: cyl, ring: a, layer: 0, angle: 0 }, merge)];
            for k in 1..=res.radial {
                let r = radius * k as f64 / res.radial as f64;
                for j in 0..circ {
                    let phi = angle0 + 2.0 * PI * j as f64 / circ as f64;
                    let p = centre + Vec3::new(r * phi.cos(), r * phi.sin(), 0.0);
                    ring.push(self.add_node(p, Slot { cylinder: cyl, ring: a, layer: k, angle: j }, merge));
                }
            }
            rings.push(ring);
        }
        let cylinder = Cylinder { rings, circ };

        let young = material.young_internal();
        let brace = material.brace_weight();
        let dz = length / (res.axial - 1) as f64;
        let wedge = 0.5 * (2.0 * PI / circ as f64).sin();
        for a in 0..res.axial - 1 {
            for k in 0..res.radial {
                let r0 = radius * k as f64 / res.radial as f64;
                let r1 = radius * (k + 1) as f64 / res.radial as f64;
                let volume = wedge * (r1 * r1 - r0 * r0) * dz;
                for j in 0..circ {
                    let mut cell = Vec::with_capacity(8);
                    for ring in [a, a + 1] {
                        if k == 0 {
                            cell.push(cylinder.node(ring, 0, 0));
                        } else {
                            cell.push(cylinder.node(ring, k, j));
                            cell.push(cylinder.node(ring, k, j + 1));
                        }
                        cell.push(cylinder.node(ring, k + 1, j));
                        cell.push(cylinder.node(ring, k + 1, j + 1));
                    }
                    self.brace_cell(&cell, cyl, circ, volume, young, brace)?;
                }
            }
        }
        Ok(cylinder)
    }

    fn brace_cell(
        &mut self,
        cell: &[usize],
        cyl: usize,
        circ: usize,
        volume: f64,
        young: f64,
        brace: f64,
    ) -> Result<(), BuildError> {
        let mut pairs = Vec::new();
        for (x, &p) in cell.iter().enumerate() {
            for &q in &cell[x + 1..] {
                if p == q {
                    continue;
                }
                let w = if is_axis_edge(self.slot_in(p, cyl), self.slot_in(q, cyl), circ) {
                    1.0
                } else {
                    brace
                };
                pairs.push((p, q, w));
            }
        }
        let total: f64 = pairs.iter().map(|t| t.2).sum();
        for (p, q, w) in pairs {
            let len = (self.positions[p] - self.positions[q]).norm();
            if len < 1e-9 {
                return Err(BuildError::Degenerate(format!(
                    "zero-length lattice edge between nodes {p} and {q}; increase lattice spacing"
                )));
            }
            self.add_edge_stiffness(p, q, cell_edge_stiffness(young, volume, w, total, len));
        }
        Ok(())
    }

    fn finish(self, total_mass: f64) -> (Vec<Vec3>, Vec<f64>, Vec<Spring>) {
        let n = self.positions.len();
        let share = total_mass / n as f64;
        let mut masses = vec![share; n];
        let partial: f64 = masses[..n - 1].iter().sum();
        masses[n - 1] = total_mass - partial;
        let springs = self
            .edges
            .iter()
            .map(|(&(i, j), &k)| Spring {
                i,
                j,
                stiffness: k,
                rest_length: (self.positions[i] - self.positions[j]).norm(),
            })
            .collect();
        (self.positions, masses, springs)
    }
}

fn check_inputs(geometry: &RobotGeometry, material: &MaterialParams, mass: f64) -> Result<(), BuildError> {
    geometry.validate()?;
    material.validate()?;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(BuildError::param("total_mass", "must be > 0"));
    }
    Ok(())
}

fn cable_slots(circ: usize) -> [usize; 3] {
    [0, circ / 3, 2 * circ / 3]
}

fn check_planar_spread(points: &[Vec3], what: &str) -> Result<(), BuildError> {
    let c = points.iter().sum::<Vec3>() / points.len() as f64;
    let mut cov = nalgebra::Matrix3::zeros();
    for p in points {
        let d = p - c;
        cov += d * d.transpose();
    }
    let sv = cov.symmetric_eigenvalues();
    let mut ev: Vec<f64> = sv.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    if ev[1] <= 1e-12 * ev[0].max(1e-300) {
        return Err(BuildError::Degenerate(format!("{what} nodes are collinear")));
    }
    Ok(())
}

/// Single leg hanging from a fixed mounting ring at the origin, tip pointing
/// down. Cable 0 runs along +x.
pub fn build_leg_model(geometry: &RobotGeometry, material: &MaterialParams, mass: f64) -> Result<SoftBodyModel, BuildError> {
    check_inputs(geometry, material, mass)?;
    let res = geometry.lattice_resolution;
    let mut b = LatticeBuilder::default();
    let leg = b.add_cylinder(
        Vec3::zeros(),
        -Vec3::z(),
        geometry.leg_length,
        geometry.leg_radius,
        res,
        0.0,
        false,
        material,
    )?;
    let top = leg.rings[0].clone();
    let tip = leg.rings[res.axial - 1].clone();
    let cables = cable_slots(res.circumferential)
        .iter()
        .map(|&j| (0..res.axial).map(|a| leg.node(a, res.radial, j)).collect())
        .collect();
    let axis = leg.centres();
    let (rest_positions, node_masses, springs) = b.finish(mass);
    check_planar_spread(&top.iter().map(|&i| rest_positions[i]).collect::<Vec<_>>(), "mounting ring")?;
    let model = SoftBodyModel {
        rest_positions,
        node_masses,
        springs,
        platform_node_ids: top.clone(),
        leg_tip_node_ids: vec![tip],
        leg_axis_node_ids: vec![axis],
        cable_waypoint_ids: cables,
        fixed_node_ids: top,
        total_mass: mass,
        rayleigh_mass_damping: material.rayleigh_mass_damping,
        rayleigh_stiffness_damping: material.rayleigh_stiffness_damping,
    };
    model.validate_built(1)?;
    Ok(model)
}

/// Three legs under a disc platform, tips resting on z = 0, platform centred on
/// the z axis. Leg `l` is mounted at azimuth `l·120°`; its cables are
/// `3l, 3l+1, 3l+2`, with cable `3l` on the outward-facing side.
pub fn build_robot_model(geometry: &RobotGeometry, material: &MaterialParams, total_mass: f64) -> Result<SoftBodyModel, BuildError> {
    check_inputs(geometry, material, total_mass)?;
    let res = geometry.lattice_resolution;
    let mut b = LatticeBuilder::default();
    let platform_res = LatticeResolution {
        axial: 2,
        radial: geometry.platform_radial,
        circumferential: geometry.platform_circumferential,
    };
    let platform = b.add_cylinder(
        Vec3::new(0.0, 0.0, geometry.leg_length),
        Vec3::z(),
        geometry.platform_thickness,
        geometry.platform_radius,
        platform_res,
        0.0,
        false,
        material,
    )?;
    let platform_ids: Vec<usize> = platform.rings.iter().flatten().copied().collect();

    let mut tips = Vec::new();
    let mut axes = Vec::new();
    let mut cables = Vec::new();
    let young = material.young_internal();
    let bar_area = PI * geometry.leg_radius.powi(2) / (1 + res.radial * res.circumferential) as f64;
    for l in 0..3 {
        let theta = (geometry.leg_mount_angle_spacing * l as f64).to_radians();
        let mount = Vec3::new(
            geometry.mount_radius() * theta.cos(),
            geometry.mount_radius() * theta.sin(),
            geometry.leg_length,
        );
        let leg = b.add_cylinder(mount, -Vec3::z(), geometry.leg_length, geometry.leg_radius, res, theta, true, material)?;
        // Tie the mounting ring into the platform: each ring node connects to
        // its three nearest bottom-face and two nearest top-face platform nodes.
        for &node in &leg.rings[0] {
            if platform_ids.contains(&node) {
                continue;
            }
            for (ring, count) in [(0usize, 3usize), (1, 2)] {
                let mut near: Vec<(f64, usize)> = platform.rings[ring]
                    .iter()
                    .map(|&q| ((b.positions[q] - b.positions[node]).norm(), q))
                    .collect();
                near.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                for &(len, q) in near.iter().take(count) {
                    if len < 1e-9 {
                        return Err(BuildError::Degenerate("coincident platform and leg nodes".into()));
                    }
                    b.add_edge_stiffness(node, q, bar_stiffness(young, bar_area, len));
                }
            }
        }
        tips.push(leg.rings[res.axial - 1].clone());
        axes.push(leg.centres());
        for j in cable_slots(res.circumferential) {
            cables.push((0..res.axial).map(|a| leg.node(a, res.radial, j)).collect());
        }
    }
    let (rest_positions, node_masses, springs) = b.finish(total_mass);
    check_planar_spread(&platform_ids.iter().map(|&i| rest_positions[i]).collect::<Vec<_>>(), "platform")?;
    let model = SoftBodyModel {
        rest_positions,
        node_masses,
        springs,
        platform_node_ids: platform_ids,
        leg_tip_node_ids: tips,
        leg_axis_node_ids: axes,
        cable_waypoint_ids: cables,
        fixed_node_ids: Vec::new(),
        total_mass,
        rayleigh_mass_damping: material.rayleigh_mass_damping,
        rayleigh_stiffness_damping: material.rayleigh_stiffness_damping,
    };
    model.validate_built(3)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> (RobotGeometry, MaterialParams) {
        (RobotGeometry::default(), MaterialParams::default())
    }

    #[test]
    fn bar_formula_matches_single_edge_cell() {
        // E = 2 MPa -> 2000 mN/mm², A = 30 mm², L = 12 mm.
        let (e, a, l) = (2000.0, 30.0, 12.0);
        let k = cell_edge_stiffness(e, a * l, 1.0, 1.0, l);
        assert!((k - 5000.0).abs() < 1e-9);
        assert!((bar_stiffness(e, a, l) - 5000.0).abs() < 1e-9);
    }

    #[test]
    fn robot_mass_is_conserved() {
        let (g, m) = inputs();
        let model = build_robot_model(&g, &m, 0.5).unwrap();
        let sum: f64 = model.node_masses.iter().sum();
        assert!((sum - 0.5).abs() <= 1e-15);
    }

    #[test]
    fn legs_are_120_degrees_apart() {
        let (g, m) = inputs();
        let model = build_robot_model(&g, &m, 0.5).unwrap();
        let dirs: Vec<f64> = model
            .leg_tip_node_ids
            .iter()
            .map(|ids| {
                let c = ids.iter().map(|&i| model.rest_positions[i]).sum::<Vec3>() / ids.len() as f64;
                c.y.atan2(c.x)
            })
            .collect();
        for a in 0..3 {
            let b = (a + 1) % 3;
            let mut d = (dirs[b] - dirs[a]).to_degrees().rem_euclid(360.0);
            if d > 180.0 {
                d = 360.0 - d;
            }
            assert!((d - 120.0).abs() < 1e-9, "separation {d}");
        }
    }

    #[test]
    fn robot_model_invariants_hold() {
        let (g, m) = inputs();
        let model = build_robot_model(&g, &m, 0.5).unwrap();
        model.validate_built(3).unwrap();
        assert_eq!(model.cable_waypoint_ids.len(), 9);
        assert!(model.fixed_node_ids.is_empty());
        let min_z = model.rest_positions.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
        assert!(min_z.abs() < 1e-12);
    }

    #[test]
    fn coarse_lattice_is_rejected_with_parameter_name() {
        let (mut g, m) = inputs();
        g.lattice_resolution.axial = 1;
        let err = build_robot_model(&g, &m, 0.5).unwrap_err();
        assert!(err.to_string().contains("lattice_resolution.axial"), "{err}");

        let (mut g, m) = inputs();
        g.lattice_resolution.circumferential = 4;
        let err = build_leg_model(&g, &m, 0.1).unwrap_err();
        assert!(err.to_string().contains("circumferential"), "{err}");

        let (mut g, m) = inputs();
        g.leg_length = 0.0;
        let err = build_leg_model(&g, &m, 0.1).unwrap_err();
        assert!(err.to_string().contains("leg_length"), "{err}");
    }

    #[test]
    fn leg_model_fixes_mount_ring() {
        let (g, m) = inputs();
        let model = build_leg_model(&g, &m, 0.1).unwrap();
        let n = 1 + g.lattice_resolution.radial * g.lattice_resolution.circumferential;
        assert_eq!(model.fixed_node_ids.len(), n);
        assert!(model.fixed_node_ids.iter().all(|&i| model.rest_positions[i].z == 0.0));
    }

    #[test]
    fn stiffness_scales_linearly_with_young_modulus() {
        let (g, mut m) = inputs();
        let a = build_leg_model(&g, &m, 0.1).unwrap();
        m.young_modulus *= 2.0;
        let b = build_leg_model(&g, &m, 0.1).unwrap();
        for (x, y) in a.springs.iter().zip(&b.springs) {
            assert!((2.0 * x.stiffness - y.stiffness).abs() < 1e-9 * y.stiffness);
        }
    }

    #[test]
    fn model_json_round_trip() {
        let (g, m) = inputs();
        let model = build_robot_model(&g, &m, 0.5).unwrap();
        let back = SoftBodyModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(model, back);
    }
}
