//! Matrix-free conjugate gradient.

use crate::error::PhysicsError;

#[derive(Debug, Clone, PartialEq)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// ‖A·x − b‖ / ‖b‖ at exit (0 when b = 0).
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A·x = b` for a symmetric positive-definite operator given as
/// `apply(v, out)`, starting from zero, until `‖r‖ ≤ tol·‖b‖`.
pub fn solve_cg<F>(apply: F, rhs: &[f64], tol: f64, max_iter: usize) -> Result<CgSolution, PhysicsError>
where
    F: FnMut(&[f64], &mut [f64]),
{
    solve_pcg(apply, None, rhs, tol, max_iter)
}

/// Conjugate gradient with an optional Jacobi preconditioner given as the
/// inverse diagonal.
pub fn solve_pcg<F>(
    apply: F,
    inv_diag: Option<&[f64]>,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgSolution, PhysicsError>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = rhs.len();
    if let Some(d) = inv_diag {
        if d.len() != n {
            return Err(PhysicsError::LengthMismatch {
                what: "preconditioner",
                expected: n,
                actual: d.len(),
            });
        }
    }
    match inv_diag {
        Some(d) => solve_preconditioned(
            apply,
            |r: &[f64], z: &mut [f64]| z.iter_mut().zip(r).zip(d).for_each(|((z, r), d)| *z = r * d),
            rhs,
            tol,
            max_iter,
        ),
        None => solve_preconditioned(apply, |r: &[f64], z: &mut [f64]| z.copy_from_slice(r), rhs, tol, max_iter),
    }
}

/// Conjugate gradient with an arbitrary symmetric positive-definite
/// preconditioner `precondition(r, z)` computing `z = M⁻¹·r`.
pub fn solve_preconditioned<F, P>(
    mut apply: F,
    mut precondition: P,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgSolution, PhysicsError>
where
    F: FnMut(&[f64], &mut [f64]),
    P: FnMut(&[f64], &mut [f64]),
{
    let n = rhs.len();
    let b_norm = dot(rhs, rhs).sqrt();
    if !b_norm.is_finite() {
        return Err(PhysicsError::NonFinite("linear system right-hand side"));
    }
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgSolution { x, iterations: 0, relative_residual: 0.0 });
    }
    let target = tol * b_norm;
    let mut r = rhs.to_vec();
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut r_norm = b_norm;

    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // Breakdown: operator not positive definite along p.
            return Err(PhysicsError::NotConverged {
                iterations: it,
                residual: r_norm / b_norm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        r_norm = dot(&r, &r).sqrt();
        if !r_norm.is_finite() {
            return Err(PhysicsError::NonFinite("conjugate gradient residual"));
        }
        if r_norm <= target {
            return Ok(CgSolution {
                x,
                iterations: it,
                relative_residual: r_norm / b_norm,
            });
        }
        precondition(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(PhysicsError::NotConverged {
        iterations: max_iter,
        residual: r_norm / b_norm,
    })
}
