//! Independent 1D solver for the slope equation
//! `d(rho)/dt + rho^2 * (rho^3)'''' = 0` with `rho = rho_b` and
//! `(rho^3)'' = 0` at the endpoints, used to cross-validate the height-based
//! march through the identity `rho = 1 / lap u`.
//!
//! Time stepping is semi-implicit: the stiff fourth-difference acts on the
//! lagged linearization `rho^3 ~ 3 rho_n^2 rho_{n+1} - 2 rho_n^3`, so each
//! step is one pentadiagonal solve. The `(rho^3)'' = 0` endpoint condition is
//! imposed by exact ghost-node elimination in the fourth-difference rows next
//! to the boundary. Positivity is monitored, never enforced: the discrete
//! operator is odd under `rho -> -rho`, so any sign control must come from
//! the data.

use crate::field::ScalarField;
use crate::grid::Grid;
use crate::interpolants::eval_interpolants;
use crate::linalg::Banded;
use crate::stepper::Trajectory;
use crate::{cast, Error, Result, Scalar};
use std::sync::Arc;

/// Time levels of the slope solver, all strictly positive.
#[derive(Debug, Clone)]
pub struct RhoTrajectory<S: Scalar> {
    grid: Arc<Grid<S>>,
    dt: S,
    states: Vec<ScalarField<S>>,
    boundary: (S, S),
    /// Sup-norm defect of each accepted level against the fully nonlinear
    /// implicit update, quantifying the lagged-linearization error.
    defects: Vec<S>,
}

impl<S: Scalar> RhoTrajectory<S> {
    pub fn grid(&self) -> &Arc<Grid<S>> {
        &self.grid
    }

    pub fn dt(&self) -> S {
        self.dt
    }

    pub fn states(&self) -> &[ScalarField<S>] {
        &self.states
    }

    pub fn state(&self, n: usize) -> &ScalarField<S> {
        &self.states[n]
    }

    pub fn boundary(&self) -> (S, S) {
        self.boundary
    }

    pub fn defects(&self) -> &[S] {
        &self.defects
    }

    pub fn final_time(&self) -> S {
        self.dt * cast::<S>((self.states.len() - 1) as f64)
    }
}

/// Fourth-difference row weights at interior node `i`, with the ghost values
/// of the operand eliminated through `(rho^3)'' = 0` at the endpoints.
/// Returns `(columns, weights)` over node ids, scaled by `1/h^4`.
fn d4_row<S: Scalar>(grid: &Grid<S>, i: usize) -> (Vec<usize>, Vec<S>) {
    let n = grid.node_count() - 1; // last node id
    let h = grid.spacing()[0];
    let h4 = h * h * h * h;
    let w = |c: f64| cast::<S>(c);
    let (cols, raw): (Vec<usize>, Vec<f64>) = if i == 1 {
        // Ghost g_{-1} = 2 g_0 - g_1 folds into the standard 5-point row.
        (vec![0, 1, 2, 3], vec![-2.0, 5.0, -4.0, 1.0])
    } else if i == n - 1 {
        (vec![n - 3, n - 2, n - 1, n], vec![1.0, -4.0, 5.0, -2.0])
    } else {
        (
            vec![i - 2, i - 1, i, i + 1, i + 2],
            vec![1.0, -4.0, 6.0, -4.0, 1.0],
        )
    };
    (cols, raw.into_iter().map(|c| w(c) / h4).collect())
}

/// Apply the boundary-aware fourth difference to a nodal vector `g`
/// (the values of `rho^3`), using `g = rho_b^3` at the endpoints.
fn apply_d4<S: Scalar>(grid: &Grid<S>, g: &[S], rho_b3: (S, S)) -> Vec<S> {
    let n = grid.node_count() - 1;
    let mut out = vec![S::zero(); grid.node_count()];
    let read = |id: usize| -> S {
        if id == 0 {
            rho_b3.0
        } else if id == n {
            rho_b3.1
        } else {
            g[id]
        }
    };
    for i in 1..n {
        let (cols, weights) = d4_row(grid, i);
        out[i] = cols
            .iter()
            .zip(&weights)
            .map(|(&c, &w)| w * read(c))
            .sum();
    }
    out
}

/// One semi-implicit step without positivity monitoring. Returns the new
/// level and its defect against the fully nonlinear implicit update.
pub fn rho_step<S: Scalar>(
    prev: &ScalarField<S>,
    rho_b: (S, S),
    dt: S,
) -> Result<(ScalarField<S>, S)> {
    let grid = prev.grid().clone();
    if grid.dim() != 1 {
        return Err(Error::InvalidGrid("slope solver is 1D only".into()));
    }
    let last = grid.node_count() - 1;
    let n_int = last - 1;
    let three = cast::<S>(3.0);
    let two = cast::<S>(2.0);
    let rb3 = (rho_b.0 * rho_b.0 * rho_b.0, rho_b.1 * rho_b.1 * rho_b.1);
    let rv = prev.values();

    // rho_{n+1} + dt rho_n^2 D4[3 rho_n^2 rho_{n+1} - 2 rho_n^3] = rho_n,
    // with the boundary entries of the operand pinned at rho_b^3.
    let mut matrix = Banded::new(n_int, 2, 2);
    let mut rhs = vec![S::zero(); n_int];
    for i in 1..last {
        let row = i - 1;
        matrix.add(row, row, S::one());
        let scale = dt * rv[i] * rv[i];
        let (cols, weights) = d4_row(&grid, i);
        let mut b = rv[i];
        for (&c, &w) in cols.iter().zip(&weights) {
            if c == 0 {
                b -= scale * w * rb3.0;
            } else if c == last {
                b -= scale * w * rb3.1;
            } else {
                matrix.add(row, c - 1, scale * w * three * rv[c] * rv[c]);
                b += scale * w * two * rv[c] * rv[c] * rv[c];
            }
        }
        rhs[row] = b;
    }
    let x = matrix.solve(rhs)?;

    let mut values = vec![S::zero(); grid.node_count()];
    values[0] = rho_b.0;
    values[last] = rho_b.1;
    values[1..last].copy_from_slice(&x);
    let next = ScalarField::from_values(&grid, values)?;

    // Defect of the accepted level against the unlagged implicit scheme.
    let g3: Vec<S> = next.values().iter().map(|&r| r * r * r).collect();
    let d4 = apply_d4(&grid, &g3, rb3);
    let mut defect = S::zero();
    for i in 1..last {
        let r = (next.value(i) - rv[i]) / dt + next.value(i) * next.value(i) * d4[i];
        defect = defect.max(r.abs());
    }
    Ok((next, defect))
}

/// March the slope equation over `[0, T]` in `n_steps` uniform steps.
///
/// Positivity is monitored: a level with any `rho <= 0` aborts the march
/// rather than being stored.
pub fn solve_rho_1d<S: Scalar>(
    rho0: &ScalarField<S>,
    rho_b: (S, S),
    total_time: S,
    n_steps: usize,
) -> Result<RhoTrajectory<S>> {
    let grid = rho0.grid().clone();
    if grid.dim() != 1 {
        return Err(Error::InvalidGrid("slope solver is 1D only".into()));
    }
    if grid.node_count() < 5 {
        return Err(Error::InvalidGrid(
            "slope solver needs at least 5 nodes".into(),
        ));
    }
    if !(total_time > S::zero()) || n_steps == 0 {
        return Err(Error::InvalidConfig(format!(
            "need T > 0 and n_steps >= 1, got T = {total_time}, n_steps = {n_steps}"
        )));
    }
    if !(rho_b.0 > S::zero() && rho_b.1 > S::zero()) {
        return Err(Error::DataValidation {
            hypothesis: "H2",
            detail: "boundary slope values must be positive".into(),
        });
    }
    if let Some((node, &v)) = rho0
        .values()
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > S::zero()))
    {
        return Err(Error::PositivityLost {
            step: 0,
            node,
            value: v.as_f64(),
        });
    }

    let dt = total_time / cast::<S>(n_steps as f64);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut defects = Vec::with_capacity(n_steps);
    states.push(rho0.clone());
    for step in 1..=n_steps {
        let (next, defect) = rho_step(states.last().expect("state 0"), rho_b, dt)?;
        if let Some((node, &v)) = next
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > S::zero()))
        {
            return Err(Error::PositivityLost {
                step,
                node,
                value: v.as_f64(),
            });
        }
        defects.push(defect);
        states.push(next);
    }
    Ok(RhoTrajectory {
        grid,
        dt,
        states,
        boundary: rho_b,
        defects,
    })
}

/// One row of a cross-validation report.
#[derive(Debug, Clone)]
pub struct CrossRow<S: Scalar> {
    pub t: S,
    /// `sup |rho_from_u - rho_direct|` at this time.
    pub cross_error: S,
    /// `sup |1/lap_h u - rho|` on the height trajectory.
    pub identity_gap: S,
    /// Certified bound for the identity gap from the step residual contract.
    pub identity_bound: S,
}

#[derive(Debug, Clone)]
pub struct CrossValidationReport<S: Scalar> {
    pub rows: Vec<CrossRow<S>>,
}

impl<S: Scalar> CrossValidationReport<S> {
    /// Whether every row honors the identity contract.
    pub fn identity_ok(&self) -> bool {
        self.rows.iter().all(|r| r.identity_gap <= r.identity_bound)
    }
}

fn aligned_index<S: Scalar>(t: S, dt: S, len: usize) -> Result<usize> {
    let ratio = t / dt;
    let idx = ratio.round();
    let gap = (ratio - idx).abs();
    if gap > cast::<S>(1e-9) {
        return Err(Error::TimeNotAligned {
            t: t.as_f64(),
            nearest: (idx * dt).as_f64(),
        });
    }
    let i = idx.as_f64() as usize;
    if i >= len {
        return Err(Error::TimeOutOfRange {
            t: t.as_f64(),
            t_max: (dt * cast::<S>((len - 1) as f64)).as_f64(),
        });
    }
    Ok(i)
}

/// Compare the height-based slope `rho = exp(psi)` against the direct slope
/// solver at the requested times, and audit the identity `lap_h u = 1/rho`
/// on the height trajectory.
pub fn cross_validate<S: Scalar>(
    traj: &Trajectory<S>,
    rho_traj: &RhoTrajectory<S>,
    times: &[S],
    fp_tol: S,
) -> Result<CrossValidationReport<S>> {
    if traj.data().grid().as_ref() != rho_traj.grid().as_ref() {
        return Err(Error::GridMismatch);
    }
    let grid = rho_traj.grid().clone();
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let interp = eval_interpolants(traj, t)?;
        let n = aligned_index(t, rho_traj.dt(), rho_traj.states().len())?;
        let direct = rho_traj.state(n);
        let cross_error = interp.rho_bar.sup_diff(direct)?;

        let lap_u = interp.u_bar.laplacian();
        let mut identity_gap = S::zero();
        let mut min_lap = S::infinity();
        for &id in grid.interior_nodes() {
            let lu = lap_u.raw()[id];
            min_lap = min_lap.min(lu);
            let gap = (lu.recip() - interp.rho_bar.value(id)).abs();
            identity_gap = identity_gap.max(gap);
        }
        // |1/(e^{-psi} + r) - e^psi| <= |r| * max(rho) * max(1/lap u) for
        // residuals r within the step contract.
        let identity_bound = if min_lap > S::zero() {
            fp_tol * interp.rho_bar.max_value() * min_lap.recip()
        } else {
            S::infinity()
        };
        rows.push(CrossRow {
            t,
            cross_error,
            identity_gap,
            identity_bound,
        });
    }
    Ok(CrossValidationReport { rows })
}
