//! Problem data (boundary height, boundary Laplacian, initial surface) with
//! the admissibility checks the time stepper relies on, plus the stepper
//! configuration knobs.

use crate::elliptic::LinearSolveConfig;
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::{cast, Error, Result, Scalar};
use std::sync::Arc;

/// Validated data set for the height equation: boundary height `b0`, boundary
/// Laplacian `b1` with floor `c0 > 0`, and initial surface `u0`.
///
/// Construction enforces:
/// * `b1 >= c0 > 0` at every node (hypothesis H2);
/// * discrete Laplacian of `u0` is `>= c0` at every interior node (H3);
/// * `b1` matches the discrete Laplacian of `u0` at interior nodes adjacent
///   to the boundary, within `1e-8 * (1 + sup|b1|)` — the discrete stand-in
///   for the trace compatibility condition on the boundary.
#[derive(Debug, Clone)]
pub struct ProblemData<S: Scalar> {
    grid: Arc<Grid<S>>,
    b0: ScalarField<S>,
    b1: ScalarField<S>,
    c0: S,
    u0: ScalarField<S>,
}

impl<S: Scalar> ProblemData<S> {
    pub fn new(
        b0: ScalarField<S>,
        b1: ScalarField<S>,
        c0: S,
        u0: ScalarField<S>,
    ) -> Result<Self> {
        if !b0.same_grid(&b1) || !b0.same_grid(&u0) {
            return Err(Error::GridMismatch);
        }
        if !(c0 > S::zero() && c0.is_finite()) {
            return Err(Error::DataValidation {
                hypothesis: "H2",
                detail: format!("floor c0 must be positive, got {c0}"),
            });
        }
        let grid = Arc::clone(b0.grid());
        let data = ProblemData { grid, b0, b1, c0, u0 };
        data.validate()?;
        Ok(data)
    }

    /// Build data whose initial surface carries the prescribed Laplacian
    /// profile: `u0` solves `lap_h u0 = b1` in the interior with `u0 = b0` on
    /// the boundary, so the trace compatibility holds to solver precision by
    /// construction.
    pub fn from_laplacian_profile(
        b0: ScalarField<S>,
        b1: ScalarField<S>,
        c0: S,
        linear: &crate::elliptic::LinearSolveConfig<S>,
    ) -> Result<Self> {
        if !b0.same_grid(&b1) {
            return Err(Error::GridMismatch);
        }
        let grid = Arc::clone(b0.grid());
        let rhs = b1.map(|v| -v)?;
        let u0 = crate::elliptic::solve_poisson(&grid, &rhs, &b0, linear)?.field;
        Self::new(b0, b1, c0, u0)
    }

    fn validate(&self) -> Result<()> {
        // Floors are checked with a round-off allowance so data sitting
        // exactly on the constraint (the steady configurations) is admitted.
        let floor_slack = cast::<S>(1e-12) * (S::one() + self.c0);
        for (node, &v) in self.b1.values().iter().enumerate() {
            if v < self.c0 - floor_slack {
                return Err(Error::DataValidation {
                    hypothesis: "H2",
                    detail: format!("floor violated at node {node}: b1 = {v} < c0 = {}", self.c0),
                });
            }
        }
        let lap_u0 = self.u0.laplacian();
        let h_min = self
            .grid
            .spacing()
            .iter()
            .fold(S::infinity(), |m, &h| m.min(h));
        let lap_slack = cast::<S>(64.0) * S::epsilon() * (S::one() + self.u0.sup_norm())
            / (h_min * h_min)
            + floor_slack;
        for &id in self.grid.interior_nodes() {
            let v = lap_u0.raw()[id];
            if v < self.c0 - lap_slack {
                return Err(Error::DataValidation {
                    hypothesis: "H3",
                    detail: format!(
                        "discrete Laplacian of u0 at node {id} is {v} < c0 = {}",
                        self.c0
                    ),
                });
            }
        }
        let tol = cast::<S>(1e-8) * (S::one() + self.b1.sup_norm());
        for id in self.grid.boundary_adjacent_interior() {
            let gap = (lap_u0.raw()[id] - self.b1.value(id)).abs();
            if gap > tol {
                return Err(Error::DataValidation {
                    hypothesis: "compatibility",
                    detail: format!(
                        "b1 and the discrete Laplacian of u0 disagree by {gap} at boundary-adjacent node {id} (tolerance {tol})"
                    ),
                });
            }
        }
        Ok(())
    }

    /// Apply `passes` sweeps of the nearest-neighbor averaging stencil
    /// (`[1, 2, 1] / 4` per axis, boundary nodes fixed) to `u0`, `b0`, `b1`.
    /// The floor `b1 >= c0` and the interior positivity of the Laplacian of
    /// the smoothed `u0` are re-validated; the boundary-trace compatibility
    /// is a property of the raw data and is not re-checked.
    pub fn smoothed(&self, passes: usize) -> Result<Self> {
        if passes == 0 {
            return Ok(self.clone());
        }
        let smooth = |f: &ScalarField<S>| -> Result<ScalarField<S>> {
            let mut values = f.values().to_vec();
            let quarter = cast::<S>(0.25);
            let half = cast::<S>(0.5);
            for _ in 0..passes {
                for axis in 0..self.grid.dim() {
                    let s = self.grid.stride(axis);
                    let prev = values.clone();
                    for &id in self.grid.interior_nodes() {
                        values[id] =
                            quarter * prev[id - s] + half * prev[id] + quarter * prev[id + s];
                    }
                }
            }
            ScalarField::from_values(&self.grid, values)
        };
        let b0 = smooth(&self.b0)?;
        let b1 = smooth(&self.b1)?;
        let u0 = smooth(&self.u0)?;
        for (node, &v) in b1.values().iter().enumerate() {
            if v < self.c0 {
                return Err(Error::DataValidation {
                    hypothesis: "H2",
                    detail: format!(
                        "floor violated after smoothing at node {node}: b1 = {v} < c0 = {}",
                        self.c0
                    ),
                });
            }
        }
        let lap = u0.laplacian();
        for &id in self.grid.interior_nodes() {
            if !(lap.raw()[id] > S::zero()) {
                return Err(Error::DataValidation {
                    hypothesis: "H3",
                    detail: format!(
                        "smoothed u0 lost Laplacian positivity at node {id}: {}",
                        lap.raw()[id]
                    ),
                });
            }
        }
        Ok(ProblemData {
            grid: Arc::clone(&self.grid),
            b0,
            b1,
            c0: self.c0,
            u0,
        })
    }

    pub fn grid(&self) -> &Arc<Grid<S>> {
        &self.grid
    }

    pub fn b0(&self) -> &ScalarField<S> {
        &self.b0
    }

    pub fn b1(&self) -> &ScalarField<S> {
        &self.b1
    }

    pub fn c0(&self) -> S {
        self.c0
    }

    pub fn u0(&self) -> &ScalarField<S> {
        &self.u0
    }

    /// Initial substitution variable: `-ln(lap_h u0)` at interior nodes,
    /// `-ln b1` on the boundary. Well defined because H3 bounds the argument
    /// away from zero.
    pub fn psi0(&self) -> ScalarField<S> {
        let lap = self.u0.laplacian();
        let mut values = vec![S::zero(); self.grid.node_count()];
        for &id in self.grid.interior_nodes() {
            values[id] = -lap.raw()[id].ln();
        }
        for &id in self.grid.boundary_nodes() {
            values[id] = -self.b1.value(id).ln();
        }
        ScalarField::from_values(&self.grid, values).expect("logs of floored data are finite")
    }

    /// Reciprocal slope data for the 1D cross-check: `1 / lap_h u0` inside,
    /// `1 / b1` on the boundary.
    pub fn rho0(&self) -> ScalarField<S> {
        let lap = self.u0.laplacian();
        let mut values = vec![S::zero(); self.grid.node_count()];
        for &id in self.grid.interior_nodes() {
            values[id] = lap.raw()[id].recip();
        }
        for &id in self.grid.boundary_nodes() {
            values[id] = self.b1.value(id).recip();
        }
        ScalarField::from_values(&self.grid, values).expect("reciprocals of floored data are finite")
    }
}

/// Knobs of the implicit step solver.
#[derive(Debug, Clone)]
pub struct StepperConfig<S: Scalar> {
    /// Time step; overwritten with `T / j` by the Rothe driver.
    pub tau: S,
    /// Damping factor of the fixed-point iteration, in `(0, 1]`.
    pub fp_damping: S,
    /// Convergence tolerance on the sup-norm residual of the coupled system.
    pub fp_tol: S,
    /// Iteration budget per continuation stage.
    pub fp_max_iter: usize,
    /// 1 solves at sigma = 1 directly; larger values enable the continuation
    /// ladder sigma = 1/S, 2/S, ..., 1 as a fallback.
    pub homotopy_stages: usize,
    /// Optional data-smoothing sweeps applied by the Rothe driver.
    pub smoothing_passes: usize,
    pub linear: LinearSolveConfig<S>,
}

impl<S: Scalar> Default for StepperConfig<S> {
    fn default() -> Self {
        StepperConfig {
            tau: cast::<S>(0.1),
            fp_damping: cast::<S>(0.5),
            fp_tol: cast::<S>(1e-10),
            fp_max_iter: 200,
            homotopy_stages: 1,
            smoothing_passes: 0,
            linear: LinearSolveConfig::default(),
        }
    }
}

impl<S: Scalar> StepperConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > S::zero() && self.tau.is_finite()) {
            return Err(Error::InvalidConfig(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.fp_damping > S::zero() && self.fp_damping <= S::one()) {
            return Err(Error::InvalidConfig(format!(
                "fp_damping must lie in (0, 1], got {}",
                self.fp_damping
            )));
        }
        if !(self.fp_tol > S::zero()) {
            return Err(Error::InvalidConfig(format!(
                "fp_tol must be positive, got {}",
                self.fp_tol
            )));
        }
        if self.fp_max_iter == 0 {
            return Err(Error::InvalidConfig("fp_max_iter must be positive".into()));
        }
        if self.homotopy_stages == 0 {
            return Err(Error::InvalidConfig("homotopy_stages must be >= 1".into()));
        }
        self.linear.validate()
    }
}
