use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tripod_core::cable::CableCommand;
use tripod_core::contact::{contact_forces, detect_contacts};
use tripod_core::physics::{solve_cg, step_implicit_euler, NoExternalForces, SceneParams, Vec3};
use tripod_core::scene::{SceneConfig, Simulation};

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &b * b.transpose() + DMatrix::identity(n, n) * 0.5
}

#[test]
fn cg_matches_dense_cholesky_on_random_spd_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for _ in 0..10 {
        let a = random_spd(50, &mut rng);
        let b = DVector::from_fn(50, |_, _| rng.random_range(-1.0..1.0));
        let direct = a.clone().cholesky().unwrap().solve(&b);
        let sol = solve_cg(
            |x, out| {
                let y = &a * DVector::from_column_slice(x);
                out.copy_from_slice(y.as_slice());
            },
            b.as_slice(),
            1e-14,
            1000,
        )
        .unwrap();
        for (x, y) in sol.x.iter().zip(direct.iter()) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }
}

fn total_weight(sim: &Simulation) -> f64 {
    sim.model.total_mass * -sim.params.gravity[2]
}

#[test]
fn resting_robot_carries_its_weight_inside_the_friction_cone() {
    let mut sim = Simulation::robot(&SceneConfig::default()).unwrap();
    let ground = sim.ground.clone().unwrap();
    let mu = ground.params.friction_coef;
    let steps = (10.0 / sim.params.time_step).round() as usize;
    for _ in 0..steps {
        sim.step().unwrap();
        let contacts = detect_contacts(&sim.state, ground.plane_height, &ground.params);
        for (node, f) in contact_forces(&contacts, &sim.state, &ground.params) {
            let ft = f.x.hypot(f.y);
            assert!(f.z >= 0.0, "node {node} pulled into the floor");
            assert!(ft <= mu * f.z.abs() + 1e-12, "node {node}: |f_t| {ft} > μ·f_n {}", mu * f.z);
        }
    }
    let contacts = detect_contacts(&sim.state, ground.plane_height, &ground.params);
    let normal: f64 = contact_forces(&contacts, &sim.state, &ground.params).iter().map(|(_, f)| f.z).sum();
    let w = total_weight(&sim);
    assert!((normal - w).abs() <= 0.005 * w, "normal {normal} vs weight {w}");

    // Penalty depth, averaged over the loaded nodes.
    let loaded: Vec<f64> = contacts.iter().filter(|c| c.gap < 0.0).map(|c| -c.gap).collect();
    let bound = w / (loaded.len() as f64 * ground.params.stiffness_internal());
    let mean = loaded.iter().sum::<f64>() / loaded.len() as f64;
    assert!(mean <= bound * 1.005, "{mean} vs {bound}");
}

/// Unit vector from the leg axis to the cable in the cross-section plane.
fn cable_side(sim: &Simulation, cable: usize) -> Vec3 {
    let ids = &sim.model.cable_waypoint_ids[cable];
    let axis = &sim.model.leg_axis_node_ids[0];
    let c = sim.state.centroid(ids);
    let a = sim.state.centroid(axis);
    let d = Vec3::new(c.x - a.x, c.y - a.y, 0.0);
    d / d.norm()
}

#[test]
fn shortening_one_cable_bends_the_tip_toward_it() {
    let config = SceneConfig::default();
    let mut rest = Simulation::leg(&config).unwrap();
    rest.run(300).unwrap();
    let tip0 = rest.tip_position(0);
    for cable in 0..3 {
        let mut sim = rest.clone();
        let mut d = vec![0.0; 3];
        d[cable] = 10.0;
        sim.set_command(CableCommand { displacements: d });
        sim.run(300).unwrap();
        let shift = sim.tip_position(0) - tip0;
        let side = cable_side(&rest, cable);
        assert!(shift.dot(&side) > 1.0, "cable {cable}: tip moved {shift:?}, side {side:?}");
    }
}

#[test]
fn fixed_nodes_never_move() {
    let mut sim = Simulation::leg(&SceneConfig::default()).unwrap();
    sim.set_command(CableCommand { displacements: vec![12.0, 0.0, 5.0] });
    let fixed: Vec<Vec3> = sim.model.fixed_node_ids.iter().map(|&i| sim.state.positions[i]).collect();
    assert!(!fixed.is_empty());
    for _ in 0..200 {
        sim.step().unwrap();
        for (&i, p) in sim.model.fixed_node_ids.iter().zip(&fixed) {
            assert_eq!(sim.state.positions[i], *p);
        }
    }
}

#[test]
fn unloaded_leg_stays_at_rest() {
    let mut config = SceneConfig::default();
    config.scene.gravity = [0.0; 3];
    let mut sim = Simulation::leg(&config).unwrap();
    let start = sim.state.positions.clone();
    sim.run(100).unwrap();
    let moved = sim.state.positions.iter().zip(&start).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(moved < 1e-9, "{moved}");
}

fn sag_after(config: &SceneConfig, seconds: f64, h: f64) -> Vec3 {
    let mut config = config.clone();
    config.scene.time_step = h;
    config.scene.cg_tolerance = 1e-10;
    config.scene.cg_max_iterations = 2000;
    let mut sim = Simulation::leg(&config).unwrap();
    let start = sim.tip_position(0);
    sim.run((seconds / h).round() as usize).unwrap();
    sim.tip_position(0) - start
}

#[test]
fn sag_agrees_with_a_ten_times_finer_step() {
    let config = SceneConfig::default();
    let coarse = sag_after(&config, 1.0, 0.01);
    let fine = sag_after(&config, 1.0, 0.001);
    assert!(fine.z < 0.0);
    assert!((coarse.z - fine.z).abs() <= 0.02 * fine.z.abs(), "{} vs {}", coarse.z, fine.z);
}

#[test]
fn halving_the_step_converges() {
    // A stiff leg is at equilibrium long before 1 s; sample mid-ramp instead.
    let ends: Vec<Vec3> = [0.01, 0.005, 0.0025, 0.00125]
        .iter()
        .map(|&h| {
            let mut config = SceneConfig::default();
            config.scene.time_step = h;
            config.scene.cg_tolerance = 1e-10;
            config.scene.cg_max_iterations = 2000;
            let mut sim = Simulation::leg(&config).unwrap();
            sim.set_command(CableCommand { displacements: vec![15.0, 0.0, 0.0] });
            sim.run((0.3 / h).round() as usize).unwrap();
            sim.tip_position(0)
        })
        .collect();
    let diffs: Vec<f64> = ends.windows(2).map(|w| (w[0] - w[1]).norm()).collect();
    assert!(diffs.windows(2).all(|d| d[1] < d[0]), "{diffs:?}");
}

#[test]
fn free_body_momentum_changes_by_weight_times_step() {
    let sim = Simulation::robot(&SceneConfig::default()).unwrap();
    let mut model = (*sim.model).clone();
    model.springs.clear();
    model.rayleigh_mass_damping = 0.0;
    model.rayleigh_stiffness_damping = 0.0;
    let model = Arc::new(model);
    let params = SceneParams::default();
    let mut state = sim.state.clone();
    let expected = model.total_mass * params.gravity[2] * params.time_step;
    for _ in 0..20 {
        let (next, _) = step_implicit_euler(&model, &state, &params, &NoExternalForces).unwrap();
        let dp = next.momentum(&model) - state.momentum(&model);
        assert!((dp.z - expected).abs() <= 1e-9 * expected.abs());
        assert!(dp.x.abs() < 1e-9 && dp.y.abs() < 1e-9);
        state = next;
    }
}

fn mechanical_energy(sim: &Simulation) -> f64 {
    let elastic: f64 = sim
        .model
        .springs
        .iter()
        .map(|s| {
            let stretch = (sim.state.positions[s.i] - sim.state.positions[s.j]).norm() - s.rest_length;
            0.5 * s.stiffness * stretch * stretch
        })
        .sum();
    sim.state.kinetic_energy(&sim.model) + elastic
}

#[test]
fn damped_motion_loses_energy() {
    let mut config = SceneConfig::default();
    config.scene.gravity = [0.0; 3];
    let mut sim = Simulation::robot(&config).unwrap();
    sim.ground = None;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for v in &mut sim.state.velocities {
        *v = Vec3::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
    }
    let mut e = mechanical_energy(&sim);
    for _ in 0..200 {
        sim.step().unwrap();
        let next = mechanical_energy(&sim);
        assert!(next <= e, "{next} > {e}");
        e = next;
    }
}

#[test]
fn identical_inputs_give_bit_identical_states() {
    let mut a = Simulation::robot(&SceneConfig::default()).unwrap();
    a.set_command(CableCommand { displacements: vec![5.0, 0.0, 0.0, 0.0, 8.0, 0.0, 0.0, 0.0, 3.0] });
    let mut b = a.clone();
    for _ in 0..100 {
        a.step().unwrap();
        b.step().unwrap();
    }
    assert_eq!(a.state, b.state);
}
