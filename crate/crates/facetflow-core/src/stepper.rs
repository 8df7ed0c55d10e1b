//! Implicit time stepping for `du/dt = lap((lap u)^-3)` via the substitution
//! `lap u = exp(-psi)`.
//!
//! One implicit step with previous iterate `v` solves the coupled system
//!
//! ```text
//! (u - v)/tau - lap_h exp(3 psi) + tau psi = 0   (interior)
//! lap_h u = exp(-psi)                            (interior)
//! u = b0,  psi = -ln b1                          (boundary)
//! ```
//!
//! by damped fixed-point iteration on `psi`. A single sweep of the map is a
//! Poisson solve for `u` followed by a reaction-diffusion solve with frozen
//! coefficient `3 exp(3g)` for the next `psi` — well posed because the frozen
//! coefficient is bounded above and away from zero while the iterate stays in
//! its certified box. Convergence is declared on the residual of the original
//! coupled system, never on iterate differences. If the direct iteration
//! fails, a continuation ladder `psi = sigma * B(psi)`, `sigma = 1/S ... 1`
//! restarts it with each stage warm-starting the next.

use crate::elliptic::{solve_dirichlet, solve_poisson, EllipticOperator, LinearSolveConfig};
use crate::field::ScalarField;
use crate::problem::{ProblemData, StepperConfig};
use crate::{cast, Error, Result, Scalar};

/// Converged state of one implicit step.
///
/// Invariants held by construction: `rho = exp(psi)` node-wise and positive,
/// `psi = -ln b1` and `u = b0` on the boundary, and `lap_h u = exp(-psi)` at
/// interior nodes within `residual`.
#[derive(Debug, Clone)]
pub struct StepState<S: Scalar> {
    pub k: usize,
    pub u: ScalarField<S>,
    pub psi: ScalarField<S>,
    pub rho: ScalarField<S>,
    /// Achieved sup-norm residual of the coupled system.
    pub residual: S,
    /// Fixed-point sweeps spent on this step, over all continuation stages.
    pub iters: usize,
}

/// The full step sequence `k = 0 ... j` with uniform spacing `tau`.
#[derive(Debug, Clone)]
pub struct Trajectory<S: Scalar> {
    data: ProblemData<S>,
    tau: S,
    states: Vec<StepState<S>>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn data(&self) -> &ProblemData<S> {
        &self.data
    }

    pub fn tau(&self) -> S {
        self.tau
    }

    pub fn states(&self) -> &[StepState<S>] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &StepState<S> {
        &self.states[k]
    }

    /// Number of time steps `j` (states run `0..=j`).
    pub fn step_count(&self) -> usize {
        self.states.len() - 1
    }

    pub fn final_time(&self) -> S {
        self.tau * cast::<S>(self.step_count() as f64)
    }
}

/// Certified box `-M <= psi <= L` for a converged step, evaluated from the
/// comparison-function constants of the existence proof:
/// `M = max((|v| + |b0|)/tau^2, (ln sup b1)+)` and
/// `L = max(|u - v|/tau^2, (ln c0)-)`.
pub fn psi_box_bounds<S: Scalar>(
    data: &ProblemData<S>,
    u_prev: &ScalarField<S>,
    u_computed: &ScalarField<S>,
    tau: S,
) -> (S, S) {
    let tau2 = tau * tau;
    let plus = |x: S| x.max(S::zero());
    let m =
        ((u_prev.sup_norm() + data.b0().sup_norm()) / tau2).max(plus(data.b1().sup_norm().ln()));
    let diff = u_computed
        .sup_diff(u_prev)
        .expect("box bounds need matching grids");
    let l = (diff / tau2).max(plus(-data.c0().ln()));
    (m, l)
}

/// Clamp window used *during* iteration: twice the analytic box evaluated
/// with the a priori surrogate `sup|u| <= sup|b0|` in place of the computed
/// step. Keeps the exponentials representable mid-iteration; the final state
/// must sit inside the true box with the clamp inactive.
fn guard_box<S: Scalar>(data: &ProblemData<S>, u_prev: &ScalarField<S>, tau: S) -> (S, S) {
    let tau2 = tau * tau;
    let two = cast::<S>(2.0);
    let plus = |x: S| x.max(S::zero());
    let m =
        ((u_prev.sup_norm() + data.b0().sup_norm()) / tau2).max(plus(data.b1().sup_norm().ln()));
    let l = ((data.b0().sup_norm() + u_prev.sup_norm()) / tau2).max(plus(-data.c0().ln()));
    (two * m, two * l)
}

/// Round-off allowance for box-bound certification: the computed pair solves
/// the system only to `fp_tol`, and degenerate configurations (a steady state
/// with `c0 = 1`) have exact box walls at zero.
pub fn certified_box_slack<S: Scalar>(fp_tol: S, m: S, l: S) -> S {
    cast::<S>(10.0) * fp_tol
        + cast::<S>(1e3) * S::epsilon() * (S::one() + m.abs() + l.abs())
}

fn overflow_limit<S: Scalar>() -> S {
    S::max_value().ln() / cast::<S>(2.0)
}

fn check_overflow_guard<S: Scalar>(g: &ScalarField<S>) -> Result<()> {
    let limit = overflow_limit::<S>();
    let max_abs3 = cast::<S>(3.0) * g.sup_norm();
    if max_abs3 > limit {
        return Err(Error::OverflowGuard {
            max_abs: max_abs3.as_f64(),
            limit: limit.as_f64(),
        });
    }
    Ok(())
}

struct Sweep<S: Scalar> {
    u: ScalarField<S>,
    psi: ScalarField<S>,
}

/// One application of the fixed-point map at continuation parameter `sigma`.
///
/// `defect_correct` augments the reaction-diffusion right-hand side with the
/// discrete commutator `lap_h exp(3g) - div_h(3 exp(3g) grad g)`, which
/// vanishes in the continuum; with it, fixed points satisfy the original
/// system in its `lap_h exp(3 psi)` form to solver tolerance.
fn picard_sweep<S: Scalar>(
    g: &ScalarField<S>,
    u_prev: &ScalarField<S>,
    data: &ProblemData<S>,
    tau: S,
    sigma: S,
    linear: &LinearSolveConfig<S>,
    defect_correct: bool,
) -> Result<Sweep<S>> {
    check_overflow_guard(g)?;
    let grid = data.grid();
    let three = cast::<S>(3.0);

    let rhs_u = g.map(|v| -(-v).exp())?;
    let u = solve_poisson(grid, &rhs_u, data.b0(), linear)?.field;

    let w = g.map(|v| (three * v).exp())?;
    let coeff = w.map(|v| three * v)?;
    let op = EllipticOperator::new(coeff, tau)?;

    let mut rhs_vals = vec![S::zero(); grid.node_count()];
    for &id in grid.interior_nodes() {
        rhs_vals[id] = -sigma * (u.value(id) - u_prev.value(id)) / tau;
    }
    if defect_correct {
        let lap_w = w.laplacian();
        let mut div_form = vec![S::zero(); grid.node_count()];
        let diffusion = EllipticOperator::new(op.coefficient().clone(), S::zero())?;
        diffusion.apply_interior(g.values(), &mut div_form);
        for &id in grid.interior_nodes() {
            // div_form holds -div(a grad g); the commutator is
            // lap_h w - div(a grad g) = lap_h w + div_form.
            rhs_vals[id] += lap_w.raw()[id] + div_form[id];
        }
    }
    let rhs = ScalarField::from_values(grid, rhs_vals)?;
    let bc = data.b1().map(|v| -sigma * v.ln())?;
    let psi = solve_dirichlet(&op, &rhs, &bc, linear)?.field;
    Ok(Sweep { u, psi })
}

/// The fixed-point map `B`: a Poisson solve `-lap u = -exp(-g)`, `u = b0`,
/// followed by the reaction-diffusion solve
/// `-div(3 exp(3g) grad psi) + tau psi = -sigma (u - u_prev)/tau` with
/// boundary data `-sigma ln b1`. Returns `(u, B(g))`.
pub fn picard_map_b<S: Scalar>(
    g: &ScalarField<S>,
    u_prev: &ScalarField<S>,
    data: &ProblemData<S>,
    tau: S,
    sigma: S,
    linear: &LinearSolveConfig<S>,
) -> Result<(ScalarField<S>, ScalarField<S>)> {
    if !(sigma > S::zero() && sigma <= S::one()) {
        return Err(Error::InvalidConfig(format!(
            "sigma must lie in (0, 1], got {sigma}"
        )));
    }
    let sweep = picard_sweep(g, u_prev, data, tau, sigma, linear, false)?;
    Ok((sweep.u, sweep.psi))
}

/// Residual of the (sigma-scaled) coupled system at a candidate pair.
pub(crate) fn coupled_residual<S: Scalar>(
    u: &ScalarField<S>,
    psi: &ScalarField<S>,
    u_prev: &ScalarField<S>,
    tau: S,
    sigma: S,
) -> Result<S> {
    let grid = u.grid();
    let three = cast::<S>(3.0);
    let w = psi.map(|v| (three * v).exp())?;
    let lap_w = w.laplacian();
    let lap_u = u.laplacian();
    let mut r = S::zero();
    for &id in grid.interior_nodes() {
        let r1 = sigma * (u.value(id) - u_prev.value(id)) / tau - lap_w.raw()[id]
            + tau * psi.value(id);
        let r2 = lap_u.raw()[id] - (-psi.value(id)).exp();
        r = r.max(r1.abs()).max(r2.abs());
    }
    if r.is_nan() {
        return Err(Error::NanDetected("coupled residual"));
    }
    Ok(r)
}

fn set_boundary_psi<S: Scalar>(psi: &mut ScalarField<S>, data: &ProblemData<S>, sigma: S) {
    for idx in 0..data.grid().boundary_nodes().len() {
        let id = data.grid().boundary_nodes()[idx];
        let v = -sigma * data.b1().value(id).ln();
        psi.values_mut()[id] = v;
    }
}

/// Solve one implicit step from `u_prev`.
///
/// The damped iteration `psi <- (1 - omega) psi + omega B(psi)` starts from
/// `warm_start` (the previous step's `psi`; defaults to the boundary value
/// `-ln b1` extended as a field) and is declared converged when the residual
/// of the original coupled system drops below `cfg.fp_tol`. On failure with
/// `cfg.homotopy_stages > 1` the continuation ladder restarts it. The
/// returned state is verified against its certified box.
pub fn solve_step<S: Scalar>(
    u_prev: &ScalarField<S>,
    data: &ProblemData<S>,
    cfg: &StepperConfig<S>,
    warm_start: Option<&ScalarField<S>>,
) -> Result<StepState<S>> {
    cfg.validate()?;
    if !u_prev.same_grid(data.b0()) {
        return Err(Error::GridMismatch);
    }
    let initial = match warm_start {
        Some(psi) => psi.clone(),
        None => data.b1().map(|v| -v.ln())?,
    };

    let mut history: Vec<f64> = Vec::new();
    let mut total_iters = 0usize;

    // Direct attempt at sigma = 1, then the continuation ladder if enabled.
    let mut schedules: Vec<Vec<S>> = vec![vec![S::one()]];
    if cfg.homotopy_stages > 1 {
        let stages = cfg.homotopy_stages;
        schedules.push(
            (1..=stages)
                .map(|i| cast::<S>(i as f64) / cast::<S>(stages as f64))
                .collect(),
        );
    }

    for sigmas in &schedules {
        match run_schedule(
            &initial,
            u_prev,
            data,
            cfg,
            sigmas,
            &mut history,
            &mut total_iters,
        ) {
            Ok(state) => return Ok(state),
            Err(Error::StepDidNotConverge { .. }) => continue,
            Err(other) => return Err(other),
        }
    }
    Err(Error::StepDidNotConverge {
        step: 0,
        iterations: total_iters,
        last_residual: history.last().copied().unwrap_or(f64::NAN),
        residual_history: history,
    })
}

fn run_schedule<S: Scalar>(
    initial: &ScalarField<S>,
    u_prev: &ScalarField<S>,
    data: &ProblemData<S>,
    cfg: &StepperConfig<S>,
    sigmas: &[S],
    history: &mut Vec<f64>,
    total_iters: &mut usize,
) -> Result<StepState<S>> {
    let tau = cfg.tau;
    let omega = cfg.fp_damping;
    let (m_guard, l_guard) = guard_box(data, u_prev, tau);
    let mut psi = initial.clone();

    for &sigma in sigmas {
        set_boundary_psi(&mut psi, data, sigma);
        let mut stage_done = false;
        for _ in 0..cfg.fp_max_iter {
            let sweep = picard_sweep(&psi, u_prev, data, tau, sigma, &cfg.linear, true)?;
            let res = coupled_residual(&sweep.u, &psi, u_prev, tau, sigma)?;
            history.push(res.as_f64());
            if res <= cfg.fp_tol {
                if sigma == S::one() {
                    return finish_state(
                        sweep.u,
                        psi,
                        res,
                        *total_iters,
                        data,
                        u_prev,
                        tau,
                        cfg.fp_tol,
                    );
                }
                stage_done = true;
                break;
            }
            *total_iters += 1;
            let mut next = psi.zip_map(&sweep.psi, |cur, b| {
                let blended = (S::one() - omega) * cur + omega * b;
                blended.max(-m_guard).min(l_guard)
            })?;
            set_boundary_psi(&mut next, data, sigma);
            psi = next;
        }
        if !stage_done {
            return Err(Error::StepDidNotConverge {
                step: 0,
                iterations: *total_iters,
                last_residual: history.last().copied().unwrap_or(f64::NAN),
                residual_history: history.clone(),
            });
        }
    }
    unreachable!("continuation ladders end at sigma = 1, which returns or errors")
}

#[allow(clippy::too_many_arguments)]
fn finish_state<S: Scalar>(
    u: ScalarField<S>,
    psi: ScalarField<S>,
    residual: S,
    iters: usize,
    data: &ProblemData<S>,
    u_prev: &ScalarField<S>,
    tau: S,
    fp_tol: S,
) -> Result<StepState<S>> {
    let (m, l) = psi_box_bounds(data, u_prev, &u, tau);
    let slack = certified_box_slack(fp_tol, m, l);
    let psi_min = psi.min_value();
    let psi_max = psi.max_value();
    if psi_min < -m - slack || psi_max > l + slack {
        return Err(Error::BoxBoundViolated {
            step: 0,
            psi_min: psi_min.as_f64(),
            psi_max: psi_max.as_f64(),
            m: m.as_f64(),
            l: l.as_f64(),
        });
    }
    let rho = psi.map(|v| v.exp())?;
    Ok(StepState {
        k: 0,
        u,
        psi,
        rho,
        residual,
        iters,
    })
}

/// March `j` uniform implicit steps over `[0, T]`.
///
/// State 0 is built from the (optionally smoothed) data with
/// `psi_0 = -ln(lap_h u0)`; each later state is produced by [`solve_step`]
/// warm-started from its predecessor.
pub fn run_rothe<S: Scalar>(
    data: &ProblemData<S>,
    total_time: S,
    j: usize,
    cfg: &StepperConfig<S>,
) -> Result<Trajectory<S>> {
    if !(total_time > S::zero()) || j == 0 {
        return Err(Error::InvalidConfig(format!(
            "need T > 0 and j >= 1, got T = {total_time}, j = {j}"
        )));
    }
    let data = data.smoothed(cfg.smoothing_passes)?;
    let mut cfg = cfg.clone();
    cfg.tau = total_time / cast::<S>(j as f64);
    cfg.validate()?;

    let psi0 = data.psi0();
    let rho0 = psi0.map(|v| v.exp())?;
    let mut states = Vec::with_capacity(j + 1);
    states.push(StepState {
        k: 0,
        u: data.u0().clone(),
        psi: psi0,
        rho: rho0,
        residual: S::zero(),
        iters: 0,
    });

    for k in 1..=j {
        let (u_prev, psi_prev) = {
            let prev = states.last().expect("state 0 exists");
            (prev.u.clone(), prev.psi.clone())
        };
        let mut state =
            solve_step(&u_prev, &data, &cfg, Some(&psi_prev)).map_err(|e| tag_step(e, k))?;
        state.k = k;
        states.push(state);
    }
    Ok(Trajectory {
        data,
        tau: cfg.tau,
        states,
    })
}

fn tag_step(e: Error, k: usize) -> Error {
    match e {
        Error::StepDidNotConverge {
            iterations,
            last_residual,
            residual_history,
            ..
        } => Error::StepDidNotConverge {
            step: k,
            iterations,
            last_residual,
            residual_history,
        },
        Error::BoxBoundViolated {
            psi_min,
            psi_max,
            m,
            l,
            ..
        } => Error::BoxBoundViolated {
            step: k,
            psi_min,
            psi_max,
            m,
            l,
        },
        other => other,
    }
}
