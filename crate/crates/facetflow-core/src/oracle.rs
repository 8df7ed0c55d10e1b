//! Dense Newton reference solver for the per-step coupled system.
//!
//! This is a desk-scale verification oracle, not a production path: it
//! assembles the full Jacobian of
//!
//! ```text
//! F1 = (u - v)/tau - lap_h exp(3 psi) + tau psi
//! F2 = lap_h u - exp(-psi)
//! ```
//!
//! over the interior unknowns `(u, psi)` and solves it by dense LU. The
//! fixed-point stepper is checked against it on small grids.

use crate::field::ScalarField;
use crate::problem::ProblemData;
use crate::{cast, Error, Result, Scalar};

/// Converged Newton iterate for one implicit step.
#[derive(Debug, Clone)]
pub struct NewtonStep<S: Scalar> {
    pub u: ScalarField<S>,
    pub psi: ScalarField<S>,
    /// Final sup-norm of `(F1, F2)`.
    pub residual: S,
    pub iterations: usize,
}

/// Solve the coupled step system by damped-free dense Newton.
///
/// `init_psi` seeds the iteration (defaults to `-ln b1` everywhere). Boundary
/// values of `u` and `psi` are held at `b0` and `-ln b1` throughout.
pub fn newton_solve_step<S: Scalar>(
    u_prev: &ScalarField<S>,
    data: &ProblemData<S>,
    tau: S,
    init_psi: Option<&ScalarField<S>>,
    tol: S,
    max_iter: usize,
) -> Result<NewtonStep<S>> {
    if !u_prev.same_grid(data.b0()) {
        return Err(Error::GridMismatch);
    }
    let grid = data.grid();
    let interior = grid.interior_nodes();
    let n = interior.len();
    let three = cast::<S>(3.0);
    let two = cast::<S>(2.0);
    let h = grid.spacing();

    // Position of each interior node in the unknown vector.
    let mut slot = vec![usize::MAX; grid.node_count()];
    for (k, &id) in interior.iter().enumerate() {
        slot[id] = k;
    }

    let mut u = u_prev.clone();
    for &id in grid.boundary_nodes() {
        u.values_mut()[id] = data.b0().value(id);
    }
    let mut psi = match init_psi {
        Some(p) => p.clone(),
        None => data.b1().map(|v| -v.ln())?,
    };
    for &id in grid.boundary_nodes() {
        psi.values_mut()[id] = -data.b1().value(id).ln();
    }

    let laplacian_row = |id: usize, values: &[S]| -> S {
        let mut acc = S::zero();
        for a in 0..grid.dim() {
            let s = grid.stride(a);
            let h2 = h[a] * h[a];
            acc += (values[id - s] - two * values[id] + values[id + s]) / h2;
        }
        acc
    };

    let mut residual = S::infinity();
    for it in 0..max_iter {
        let w: Vec<S> = psi.values().iter().map(|&p| (three * p).exp()).collect();
        let mut f = vec![S::zero(); 2 * n];
        for (k, &id) in interior.iter().enumerate() {
            f[k] = (u.value(id) - u_prev.value(id)) / tau - laplacian_row(id, &w)
                + tau * psi.value(id);
            f[n + k] = laplacian_row(id, u.values()) - (-psi.value(id)).exp();
        }
        residual = f.iter().fold(S::zero(), |m, v| m.max(v.abs()));
        if residual <= tol {
            return Ok(NewtonStep {
                u,
                psi,
                residual,
                iterations: it,
            });
        }

        // Jacobian blocks: dF1/du = I/tau, dF1/dpsi = -lap_h(3 w .) + tau I,
        // dF2/du = lap_h, dF2/dpsi = diag(exp(-psi)).
        let dim = 2 * n;
        let mut jac = vec![S::zero(); dim * dim];
        for (k, &id) in interior.iter().enumerate() {
            jac[k * dim + k] = S::one() / tau;
            jac[k * dim + n + k] += tau;
            jac[(n + k) * dim + n + k] = (-psi.value(id)).exp();
            for a in 0..grid.dim() {
                let s = grid.stride(a);
                let h2 = h[a] * h[a];
                for (nb, sign) in [(id - s, S::one()), (id, -two), (id + s, S::one())] {
                    let m = slot[nb];
                    if m != usize::MAX {
                        jac[k * dim + n + m] -= sign * three * w[nb] / h2;
                        jac[(n + k) * dim + m] += sign / h2;
                    }
                }
            }
        }
        let mut rhs = f;
        let delta = crate::linalg::dense_solve(dim, &mut jac, &mut rhs)?;
        for (k, &id) in interior.iter().enumerate() {
            u.values_mut()[id] = u.value(id) - delta[k];
            psi.values_mut()[id] = psi.value(id) - delta[n + k];
        }
        if u.values().iter().chain(psi.values()).any(|v| v.is_nan()) {
            return Err(Error::NanDetected("newton iterate"));
        }
    }
    Err(Error::StepDidNotConverge {
        step: 0,
        iterations: max_iter,
        last_residual: residual.as_f64(),
        residual_history: vec![residual.as_f64()],
    })
}
