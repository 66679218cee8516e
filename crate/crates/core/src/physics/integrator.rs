//! Linearized backward-Euler time stepping.
//!
//! One step solves
//!
//! ```text
//! (M − h·∂f/∂v − h²·∂f/∂x)·Δv = h·(f₀ + h·∂f/∂x·v₀)
//! ```
//!
//! with matrix-free preconditioned CG, then sets `v₁ = v₀ + Δv` and
//! `x₁ = x₀ + h·v₁`. Fixed nodes are projected out of the system and their
//! coordinates are never written.

use nalgebra::Matrix3;

use super::cg::{solve_pcg, solve_preconditioned};
use super::forces::{assemble_forces, spring_stiffness_block};
use super::model::SoftBodyModel;
use super::sparse::{BlockMatrix, EnvelopeCholesky};
use super::{Preconditioner, SceneParams, SimState, Vec3};
use crate::error::PhysicsError;

/// Jacobian contributions of external force fields. Stiffness terms are
/// `−∂f/∂x`, damping terms `−∂f/∂v`; all must be positive semi-definite.
#[derive(Debug, Default, Clone)]
pub struct Linearization {
    pub node_stiffness: Vec<(usize, Matrix3<f64>)>,
    pub node_damping: Vec<(usize, Matrix3<f64>)>,
    /// Spring-pattern blocks: `[[K, −K], [−K, K]]` on nodes `(i, j)`.
    pub pair_stiffness: Vec<(usize, usize, Matrix3<f64>)>,
    /// `c · g·gᵀ` with `g` sparse over nodes.
    pub rank_one_stiffness: Vec<(f64, Vec<(usize, Vec3)>)>,
}

impl Linearization {
    pub fn clear(&mut self) {
        self.node_stiffness.clear();
        self.node_damping.clear();
        self.pair_stiffness.clear();
        self.rank_one_stiffness.clear();
    }

    /// `out += scale_k · K·v + scale_c · C·v`
    fn apply(&self, v: &[f64], out: &mut [f64], scale_k: f64, scale_c: f64) {
        for (i, b) in &self.node_stiffness {
            add3(out, *i, b * get3(v, *i) * scale_k);
        }
        for (i, b) in &self.node_damping {
            add3(out, *i, b * get3(v, *i) * scale_c);
        }
        for (i, j, b) in &self.pair_stiffness {
            let d = b * (get3(v, *i) - get3(v, *j)) * scale_k;
            add3(out, *i, d);
            add3(out, *j, -d);
        }
        for (c, g) in &self.rank_one_stiffness {
            let proj: f64 = g.iter().map(|(i, gi)| gi.dot(&get3(v, *i))).sum();
            for (i, gi) in g {
                add3(out, *i, gi * (c * proj * scale_k));
            }
        }
    }

    fn add_to(&self, a: &mut BlockMatrix, scale_k: f64, scale_c: f64) {
        for (i, b) in &self.node_stiffness {
            a.diag[*i] += b * scale_k;
        }
        for (i, b) in &self.node_damping {
            a.diag[*i] += b * scale_c;
        }
        for (i, j, b) in &self.pair_stiffness {
            a.add_pair(*i, *j, b * scale_k);
        }
        for (c, g) in &self.rank_one_stiffness {
            a.add_rank_one(c * scale_k, g);
        }
    }
}

/// A source of external nodal forces (cables, contact) that also supplies its
/// linearization for the implicit solve.
pub trait ForceField {
    fn accumulate(&self, state: &SimState, forces: &mut [Vec3]);
    fn linearize(&self, state: &SimState, lin: &mut Linearization);
}

pub struct NoExternalForces;

impl ForceField for NoExternalForces {
    fn accumulate(&self, _: &SimState, _: &mut [Vec3]) {}
    fn linearize(&self, _: &SimState, _: &mut Linearization) {}
}

impl<A: ForceField, B: ForceField> ForceField for (A, B) {
    fn accumulate(&self, state: &SimState, forces: &mut [Vec3]) {
        self.0.accumulate(state, forces);
        self.1.accumulate(state, forces);
    }
    fn linearize(&self, state: &SimState, lin: &mut Linearization) {
        self.0.linearize(state, lin);
        self.1.linearize(state, lin);
    }
}

impl<F: ForceField + ?Sized> ForceField for &F {
    fn accumulate(&self, state: &SimState, forces: &mut [Vec3]) {
        (**self).accumulate(state, forces)
    }
    fn linearize(&self, state: &SimState, lin: &mut Linearization) {
        (**self).linearize(state, lin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub cg_iterations: usize,
    pub relative_residual: f64,
    /// The step was redone as two half steps after CG failed at full size.
    pub halved: bool,
}

#[inline]
fn get3(v: &[f64], i: usize) -> Vec3 {
    Vec3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2])
}

#[inline]
fn add3(v: &mut [f64], i: usize, x: Vec3) {
    v[3 * i] += x.x;
    v[3 * i + 1] += x.y;
    v[3 * i + 2] += x.z;
}

/// Reusable solver state carried between steps: a Cholesky factor from an
/// earlier step serves as preconditioner until CG slows down or it ages out.
#[derive(Debug, Clone, Default)]
pub struct StepWorkspace {
    factor: Option<EnvelopeCholesky>,
    age: usize,
}

/// A cached factor older than this many steps is rebuilt.
const MAX_FACTOR_AGE: usize = 50;
/// A cached factor that needed more CG iterations than this is rebuilt.
const MAX_LAGGED_ITERATIONS: usize = 8;

impl StepWorkspace {
    pub fn clear(&mut self) {
        self.factor = None;
        self.age = 0;
    }
}

/// Advances `state` by one `params.time_step`. If CG does not converge the
/// step is retried once as two half steps; a second failure is returned.
pub fn step_implicit_euler<F: ForceField + ?Sized>(
    model: &SoftBodyModel,
    state: &SimState,
    params: &SceneParams,
    external: &F,
) -> Result<(SimState, StepReport), PhysicsError> {
    step_implicit_euler_cached(model, state, params, external, &mut StepWorkspace::default())
}

/// [`step_implicit_euler`] reusing preconditioner work across calls.
pub fn step_implicit_euler_cached<F: ForceField + ?Sized>(
    model: &SoftBodyModel,
    state: &SimState,
    params: &SceneParams,
    external: &F,
    ws: &mut StepWorkspace,
) -> Result<(SimState, StepReport), PhysicsError> {
    match step_with(model, state, params, external, params.time_step, ws) {
        Ok(r) => Ok(r),
        Err(PhysicsError::NotConverged { .. }) => {
            let h = 0.5 * params.time_step;
            ws.clear();
            let (mid, a) = step_with(model, state, params, external, h, ws)?;
            ws.clear();
            let (mut end, b) = step_with(model, &mid, params, external, h, ws)?;
            ws.clear();
            end.time = state.time + params.time_step;
            Ok((
                end,
                StepReport {
                    cg_iterations: a.cg_iterations + b.cg_iterations,
                    relative_residual: a.relative_residual.max(b.relative_residual),
                    halved: true,
                },
            ))
        }
        Err(e) => Err(e),
    }
}

fn step_with<F: ForceField + ?Sized>(
    model: &SoftBodyModel,
    state: &SimState,
    params: &SceneParams,
    external: &F,
    h: f64,
    ws: &mut StepWorkspace,
) -> Result<(SimState, StepReport), PhysicsError> {
    let n = model.node_count();
    state.check(n)?;
    let mut ext = vec![Vec3::zeros(); n];
    external.accumulate(state, &mut ext);
    let f0 = assemble_forces(model, state, &params.gravity_vec(), &ext)?;

    let spring_blocks: Vec<Matrix3<f64>> = model
        .springs
        .iter()
        .map(|s| spring_stiffness_block(s, &state.positions[s.i], &state.positions[s.j]))
        .collect();
    let mut lin = Linearization::default();
    external.linearize(state, &mut lin);

    let fixed = model.is_fixed_mask();
    let alpha = model.rayleigh_mass_damping;
    let beta = model.rayleigh_stiffness_damping;
    let mass_scale = 1.0 + h * alpha;
    let spring_scale = h * beta + h * h;
    let h2 = h * h;

    let apply_springs = |v: &[f64], out: &mut [f64], scale: f64| {
        for (s, b) in model.springs.iter().zip(&spring_blocks) {
            let d = b * (get3(v, s.i) - get3(v, s.j)) * scale;
            add3(out, s.i, d);
            add3(out, s.j, -d);
        }
    };

    let v0: Vec<f64> = state.velocities.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
    // rhs = h·(f₀ − h·K·v₀)
    let mut kv0 = vec![0.0; 3 * n];
    apply_springs(&v0, &mut kv0, 1.0);
    lin.apply(&v0, &mut kv0, 1.0, 0.0);
    let mut rhs = vec![0.0; 3 * n];
    for i in 0..n {
        if fixed[i] {
            continue;
        }
        for a in 0..3 {
            rhs[3 * i + a] = h * (f0[i][a] - h * kv0[3 * i + a]);
        }
    }

    let mut a = BlockMatrix::new(n);
    for (d, m) in a.diag.iter_mut().zip(&model.node_masses) {
        *d = Matrix3::identity() * (mass_scale * m);
    }
    for (s, b) in model.springs.iter().zip(&spring_blocks) {
        a.add_pair(s.i, s.j, b * spring_scale);
    }
    lin.add_to(&mut a, h2, h);
    let apply = |v: &[f64], out: &mut [f64]| a.apply_masked(v, out, &fixed);
    let (tol, max_iter) = (params.cg_tolerance, params.cg_max_iterations);
    let sol = match params.preconditioner {
        Preconditioner::Jacobi => {
            let inv_diag: Vec<f64> = (0..3 * n)
                .map(|k| if fixed[k / 3] { 0.0 } else { 1.0 / a.diag[k / 3][(k % 3, k % 3)] })
                .collect();
            solve_pcg(apply, Some(&inv_diag), &rhs, tol, max_iter)?
        }
        Preconditioner::Cholesky => {
            let lagged = match &ws.factor {
                Some(chol) if ws.age < MAX_FACTOR_AGE => {
                    let cap = MAX_LAGGED_ITERATIONS.min(max_iter);
                    solve_preconditioned(apply, |r: &[f64], z: &mut [f64]| chol.solve(r, z), &rhs, tol, cap).ok()
                }
                _ => None,
            };
            match lagged {
                Some(sol) => {
                    ws.age += 1;
                    sol
                }
                None => {
                    let chol = EnvelopeCholesky::factor(&a, &fixed).ok_or(PhysicsError::NotConverged {
                        iterations: 0,
                        residual: f64::INFINITY,
                    })?;
                    let sol =
                        solve_preconditioned(apply, |r: &[f64], z: &mut [f64]| chol.solve(r, z), &rhs, tol, max_iter)?;
                    ws.factor = Some(chol);
                    ws.age = 1;
                    sol
                }
            }
        }
    };

    let mut next = state.clone();
    for i in 0..n {
        if fixed[i] {
            continue;
        }
        let v1 = state.velocities[i] + get3(&sol.x, i);
        next.velocities[i] = v1;
        next.positions[i] = state.positions[i] + v1 * h;
    }
    next.time = state.time + h;
    next.check(n)?;
    Ok((
        next,
        StepReport {
            cg_iterations: sol.iterations,
            relative_residual: sol.relative_residual,
            halved: false,
        },
    ))
}
