//! Verification diagnostics: the a priori functionals tracked along a march,
//! weak-form residuals with a certified slack bound, interpolant-gap
//! identities, Hölder moduli, and the elementary inequalities the energy
//! estimates rest on.

use crate::field::ScalarField;
use crate::interpolants::{drho_dt_on_interval, du_dt_on_interval, eval_interpolants};
use crate::stepper::{psi_box_bounds, Trajectory};
use crate::{cast, Error, Result, Scalar};

/// Hölder calibration constant: the ratio `modulus / (|d_t c~|_2 +
/// sup_t |c~|_W22)` measured once on the frozen reference march in
/// `holder_calibration_reference` (0.3505) and rounded up. Used to certify
/// the `tau^(1/4)` uniform bound on the `rho^3` interpolant gap.
pub const HOLDER_CALIBRATION: f64 = 0.5;

// ---------------------------------------------------------------------------
// Per-step a priori functionals
// ---------------------------------------------------------------------------

/// All tracked functionals at one step.
#[derive(Debug, Clone)]
pub struct StepDiagnostics<S: Scalar> {
    pub k: usize,
    pub t: S,
    /// `E(u_k) = 1/2 int |grad u_k|^2`.
    pub energy: S,
    /// `int |grad u_k|^2`.
    pub grad_u_sq: S,
    /// `int (exp(2 psi) + exp(-psi))`.
    pub mass_like: S,
    /// Running `int int (lap_h exp(3 psi))^2`.
    pub cum_lap_rho3_sq: S,
    /// Running `tau * int int exp(3 psi) |grad psi|^2`.
    pub cum_tau_grad_psi: S,
    /// Running `int int |grad exp(psi)|^2`.
    pub cum_grad_rho_sq: S,
    /// `int ((u_k - u_{k-1})/tau)^2`, zero at `k = 0`.
    pub du_dt_sq: S,
    /// Running `int int (d rho~ / dt)^2`.
    pub cum_dt_rho_sq: S,
    pub min_rho: S,
    /// Box constants of this step and the distances of `psi` to the walls.
    pub box_m: S,
    pub box_l: S,
    pub box_margin_low: S,
    pub box_margin_high: S,
    pub residual: S,
    pub iters: usize,
}

/// Time series of every tracked functional along a trajectory. Cumulative
/// series are nondecreasing in `k` by construction.
#[derive(Debug, Clone)]
pub struct DiagnosticsReport<S: Scalar> {
    pub steps: Vec<StepDiagnostics<S>>,
}

/// Scalar summary of the boundedness-bearing quantities, used by
/// refinement-stability checks.
#[derive(Debug, Clone, Copy)]
pub struct AprioriSummary<S: Scalar> {
    pub mass_like_max: S,
    pub cum_lap_rho3_sq: S,
    pub cum_tau_grad_psi: S,
    pub grad_u_sq_max: S,
    pub cum_grad_rho_sq: S,
    pub du_dt_sq_max: S,
    pub cum_dt_rho_sq: S,
}

impl<S: Scalar> AprioriSummary<S> {
    pub fn quantities(&self) -> [(&'static str, S); 7] {
        [
            ("mass_like_max", self.mass_like_max),
            ("cum_lap_rho3_sq", self.cum_lap_rho3_sq),
            ("cum_tau_grad_psi", self.cum_tau_grad_psi),
            ("grad_u_sq_max", self.grad_u_sq_max),
            ("cum_grad_rho_sq", self.cum_grad_rho_sq),
            ("du_dt_sq_max", self.du_dt_sq_max),
            ("cum_dt_rho_sq", self.cum_dt_rho_sq),
        ]
    }
}

impl<S: Scalar> DiagnosticsReport<S> {
    pub fn summary(&self) -> AprioriSummary<S> {
        let fold_max = |f: &dyn Fn(&StepDiagnostics<S>) -> S| {
            self.steps.iter().fold(S::zero(), |m, s| m.max(f(s)))
        };
        let last = self.steps.last().expect("report has state 0");
        AprioriSummary {
            mass_like_max: fold_max(&|s| s.mass_like),
            cum_lap_rho3_sq: last.cum_lap_rho3_sq,
            cum_tau_grad_psi: last.cum_tau_grad_psi,
            grad_u_sq_max: fold_max(&|s| s.grad_u_sq),
            cum_grad_rho_sq: last.cum_grad_rho_sq,
            du_dt_sq_max: fold_max(&|s| s.du_dt_sq),
            cum_dt_rho_sq: last.cum_dt_rho_sq,
        }
    }

    /// Smallest box margin over all steps; nonnegative means certified.
    pub fn min_box_margin(&self) -> S {
        self.steps.iter().fold(S::infinity(), |m, s| {
            m.min(s.box_margin_low).min(s.box_margin_high)
        })
    }

    pub fn min_rho_overall(&self) -> S {
        self.steps
            .iter()
            .fold(S::infinity(), |m, s| m.min(s.min_rho))
    }
}

/// Evaluate every tracked functional along a converged trajectory, using the
/// stencils and trapezoidal quadrature of the grid layer; time integrals use
/// the rectangle rule matching the piecewise-constant interpolants.
pub fn apriori_report<S: Scalar>(traj: &Trajectory<S>) -> Result<DiagnosticsReport<S>> {
    let tau = traj.tau();
    let three = cast::<S>(3.0);
    let two = cast::<S>(2.0);
    let mut steps = Vec::with_capacity(traj.states().len());
    let mut cum_lap = S::zero();
    let mut cum_tau_grad = S::zero();
    let mut cum_grad_rho = S::zero();
    let mut cum_dt_rho = S::zero();

    for (k, state) in traj.states().iter().enumerate() {
        let grid = state.u.grid().clone();
        let energy = state.u.dirichlet_energy();
        let grad_u_sq = state.u.gradient_square_integral(None)?;
        let mass_like = state
            .psi
            .map(|p| (two * p).exp() + (-p).exp())?
            .integrate();
        let min_rho = state.rho.min_value();

        let mut du_dt_sq = S::zero();
        if k > 0 {
            let w = state.psi.map(|p| (three * p).exp())?;
            let lap_w = w.laplacian();
            let vol = grid.cell_volume();
            let lap_sq: S = grid
                .interior_nodes()
                .iter()
                .map(|&id| lap_w.raw()[id] * lap_w.raw()[id])
                .sum::<S>()
                * vol;
            cum_lap += tau * lap_sq;

            let e3psi = state.psi.map(|p| (three * p).exp())?;
            let grad_psi_weighted = state.psi.gradient_square_integral(Some(&e3psi))?;
            cum_tau_grad += tau * tau * grad_psi_weighted;

            cum_grad_rho += tau * state.rho.gradient_square_integral(None)?;

            let dudt = du_dt_on_interval(traj, k)?;
            du_dt_sq = dudt.map(|v| v * v)?.integrate();
            let drho = drho_dt_on_interval(traj, k)?;
            cum_dt_rho += tau * drho.map(|v| v * v)?.integrate();
        }

        let u_prev = if k > 0 {
            &traj.state(k - 1).u
        } else {
            &state.u
        };
        let (m, l) = psi_box_bounds(traj.data(), u_prev, &state.u, tau);
        let box_margin_low = state.psi.min_value() + m;
        let box_margin_high = l - state.psi.max_value();

        steps.push(StepDiagnostics {
            k,
            t: tau * cast::<S>(k as f64),
            energy,
            grad_u_sq,
            mass_like,
            cum_lap_rho3_sq: cum_lap,
            cum_tau_grad_psi: cum_tau_grad,
            cum_grad_rho_sq: cum_grad_rho,
            du_dt_sq,
            cum_dt_rho_sq: cum_dt_rho,
            min_rho,
            box_m: m,
            box_l: l,
            box_margin_low,
            box_margin_high,
            residual: state.residual,
            iters: state.iters,
        });
    }
    Ok(DiagnosticsReport { steps })
}

// ---------------------------------------------------------------------------
// Weak residuals
// ---------------------------------------------------------------------------

type SpaceTimeFn<S> = dyn Fn([S; 2], S) -> S + Send + Sync;
type SpaceTimeGrad<S> = dyn Fn([S; 2], S) -> [S; 2] + Send + Sync;

/// Closed-form space-time test function with analytically supplied gradient
/// and Laplacian, so discretization error of the test function never enters
/// the residual being measured.
pub struct TestFunction<S: Scalar> {
    pub name: String,
    value: Box<SpaceTimeFn<S>>,
    gradient: Box<SpaceTimeGrad<S>>,
    laplacian: Box<SpaceTimeFn<S>>,
    /// Claim that `xi = 0` on the lateral boundary; verified by sampling.
    pub vanishes_on_lateral_boundary: bool,
    /// Claim that `xi >= 0`; verified by sampling in inequality mode.
    pub nonnegative: bool,
}

impl<S: Scalar> core::fmt::Debug for TestFunction<S> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field(
                "vanishes_on_lateral_boundary",
                &self.vanishes_on_lateral_boundary,
            )
            .field("nonnegative", &self.nonnegative)
            .finish()
    }
}

impl<S: Scalar> TestFunction<S> {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn([S; 2], S) -> S + Send + Sync + 'static,
        gradient: impl Fn([S; 2], S) -> [S; 2] + Send + Sync + 'static,
        laplacian: impl Fn([S; 2], S) -> S + Send + Sync + 'static,
        nonnegative: bool,
    ) -> Self {
        TestFunction {
            name: name.into(),
            value: Box::new(value),
            gradient: Box::new(gradient),
            laplacian: Box::new(laplacian),
            vanishes_on_lateral_boundary: true,
            nonnegative,
        }
    }

    pub fn value_at(&self, x: [S; 2], t: S) -> S {
        (self.value)(x, t)
    }

    pub fn gradient_at(&self, x: [S; 2], t: S) -> [S; 2] {
        (self.gradient)(x, t)
    }

    pub fn laplacian_at(&self, x: [S; 2], t: S) -> S {
        (self.laplacian)(x, t)
    }

    /// Pointwise sum; nonnegativity survives only if both claim it.
    pub fn add(self, other: TestFunction<S>) -> TestFunction<S> {
        let name = format!("{}+{}", self.name, other.name);
        let nonnegative = self.nonnegative && other.nonnegative;
        let (va, ga, la) = (self.value, self.gradient, self.laplacian);
        let (vb, gb, lb) = (other.value, other.gradient, other.laplacian);
        TestFunction {
            name,
            value: Box::new(move |x, t| va(x, t) + vb(x, t)),
            gradient: Box::new(move |x, t| {
                let a = ga(x, t);
                let b = gb(x, t);
                [a[0] + b[0], a[1] + b[1]]
            }),
            laplacian: Box::new(move |x, t| la(x, t) + lb(x, t)),
            vanishes_on_lateral_boundary: true,
            nonnegative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeakMode {
    /// The space-time identity whose defect measures how close the pair is
    /// to a weak solution of the slope equation.
    EqualityDef12,
    /// The one-sided form for nonnegative test functions, certified against
    /// a computed slack bound.
    InequalityThm12,
}

/// Discrete weak-form value and, in inequality mode, the certified slack.
///
/// The slack decomposes into the regularization term (`tau` scale), the
/// discrete product-rule commutator (`h^2` scale), and the fixed-point
/// residual contribution; the inequality `value <= tol_slack` is a theorem
/// about the discrete scheme up to round-off, which the cushion covers.
#[derive(Debug, Clone, Copy)]
pub struct WeakResidual<S: Scalar> {
    pub value: S,
    pub tol_slack: Option<S>,
    pub tau_term: S,
    pub commutator_term: S,
    pub residual_term: S,
    pub roundoff: S,
}

/// Evaluate the weak form of the slope equation along a trajectory against a
/// test function, using `rho-` for the spatial terms, the difference
/// quotient of `rho~` in time, analytic derivatives of `xi`, and trapezoidal
/// quadrature with right-endpoint time rectangles.
pub fn weak_residual<S: Scalar>(
    traj: &Trajectory<S>,
    xi: &TestFunction<S>,
    mode: WeakMode,
) -> Result<WeakResidual<S>> {
    let grid = traj.data().grid().clone();
    let tau = traj.tau();
    let j = traj.step_count();
    let two = cast::<S>(2.0);

    if !xi.vanishes_on_lateral_boundary {
        return Err(Error::FlagViolation {
            flag: "vanishes_on_lateral_boundary",
            detail: "test function does not claim a vanishing lateral trace".into(),
        });
    }

    // Sample the flags at every node and retained time level.
    let mut xi_sup = S::zero();
    let mut bdry_sup = S::zero();
    let mut min_xi = S::infinity();
    for k in 0..=j {
        let t = tau * cast::<S>(k as f64);
        for id in 0..grid.node_count() {
            let v = xi.value_at(grid.coords(id), t);
            xi_sup = xi_sup.max(v.abs());
            min_xi = min_xi.min(v);
            if grid.is_boundary(id) {
                bdry_sup = bdry_sup.max(v.abs());
            }
        }
    }
    let flag_tol = cast::<S>(1e-12) * (S::one() + xi_sup);
    if bdry_sup > flag_tol {
        return Err(Error::FlagViolation {
            flag: "vanishes_on_lateral_boundary",
            detail: format!("sampled boundary trace reaches {bdry_sup}"),
        });
    }
    if mode == WeakMode::InequalityThm12 {
        if !xi.nonnegative {
            return Err(Error::FlagViolation {
                flag: "nonnegative",
                detail: "inequality mode requires a nonnegative test function".into(),
            });
        }
        if min_xi < -flag_tol {
            return Err(Error::FlagViolation {
                flag: "nonnegative",
                detail: format!("sampled minimum is {min_xi}"),
            });
        }
    }

    let vol = grid.cell_volume();
    let mut value = S::zero();
    let mut tau_term = S::zero();
    let mut commutator_term = S::zero();
    let mut residual_term = S::zero();
    let mut magnitude = S::zero();

    // Fixed-point residuals of the second coupled equation per state.
    let rb_field = |k: usize| -> Result<Vec<S>> {
        let state = traj.state(k);
        let lap_u = state.u.laplacian();
        let mut out = vec![S::zero(); grid.node_count()];
        for &id in grid.interior_nodes() {
            out[id] = lap_u.raw()[id] - (-state.psi.value(id)).exp();
        }
        Ok(out)
    };
    let mut rb_prev = rb_field(0)?;

    for k in 1..=j {
        let t_k = tau * cast::<S>(k as f64);
        let state = traj.state(k);
        let prev = traj.state(k - 1);
        let w = state.rho.map(|r| r * r * r)?;
        let lap_w = w.laplacian();
        let xik: Vec<S> = (0..grid.node_count())
            .map(|id| xi.value_at(grid.coords(id), t_k))
            .collect();
        let wxi = ScalarField::from_values(
            &grid,
            w.values()
                .iter()
                .zip(&xik)
                .map(|(&a, &b)| a * b)
                .collect(),
        )?;
        let lap_wxi = wxi.laplacian();

        let mut term1 = S::zero();
        let mut term2 = S::zero();
        let mut term3 = S::zero();
        let mut s_tau_k = S::zero();
        let mut e_h_k = S::zero();
        let mut f_res_k = S::zero();
        let rb_k = rb_field(k)?;

        for &id in grid.interior_nodes() {
            let xv = xik[id];
            let drho = (state.rho.value(id) - prev.rho.value(id)) / tau;
            term1 += drho * state.rho.value(id) * xv;

            let lw = lap_w.raw()[id];
            term2 += lw * lw * xv;

            let gw = w.central_gradient_at(id);
            let gxi = xi.gradient_at(grid.coords(id), t_k);
            let lxi = xi.laplacian_at(grid.coords(id), t_k);
            let analytic = two * (gw[0] * gxi[0] + gw[1] * gxi[1]) + w.value(id) * lxi;
            term3 += lw * analytic;

            // Exact discrete product rule remainder.
            let g_h = lap_wxi.raw()[id] - xv * lw;
            e_h_k += lw * (analytic - g_h);

            s_tau_k += state.psi.value(id) * lap_wxi.raw()[id];

            let r_a = (state.u.value(id) - prev.u.value(id)) / tau - lw
                + tau * state.psi.value(id);
            f_res_k += -r_a * lap_wxi.raw()[id] + (rb_k[id] - rb_prev[id]) / tau * wxi.value(id);
        }
        term1 *= vol;
        term2 *= vol;
        term3 *= vol;
        e_h_k *= vol;
        s_tau_k *= vol * tau;
        f_res_k *= vol;

        value += tau * (term1 + term2 + term3);
        tau_term += tau * s_tau_k;
        commutator_term += tau * e_h_k;
        residual_term += tau * f_res_k;
        magnitude += tau
            * (term1.abs() + term2.abs() + term3.abs() + s_tau_k.abs() + e_h_k.abs()
                + f_res_k.abs());
        rb_prev = rb_k;
    }

    if value.is_nan() {
        return Err(Error::NanDetected("weak residual"));
    }

    let eps_floor = (cast::<S>(1e-11)).max(S::epsilon() * cast::<S>(100.0));
    let roundoff = eps_floor * (S::one() + magnitude);
    let tol_slack = match mode {
        WeakMode::EqualityDef12 => None,
        WeakMode::InequalityThm12 => {
            Some(tau_term + commutator_term + residual_term + roundoff)
        }
    };
    Ok(WeakResidual {
        value,
        tol_slack,
        tau_term,
        commutator_term,
        residual_term,
        roundoff,
    })
}

// ---------------------------------------------------------------------------
// Hölder modulus
// ---------------------------------------------------------------------------

/// Largest sampled ratio `|f(p1) - f(p2)| / (|x1 - x2|^ax + |t1 - t2|^at)`
/// over all pairs of `(x, t, f)` samples. Duplicate sample points carrying
/// different values are an error.
pub fn holder_modulus<S: Scalar>(samples: &[(S, S, S)], alpha_x: S, alpha_t: S) -> Result<S> {
    if samples.len() < 2 {
        return Err(Error::DomainViolation(
            "need at least two samples for a modulus".into(),
        ));
    }
    let mut sup = S::zero();
    for (i, &(x1, t1, f1)) in samples.iter().enumerate() {
        for &(x2, t2, f2) in &samples[i + 1..] {
            let dx = (x1 - x2).abs();
            let dt = (t1 - t2).abs();
            if dx == S::zero() && dt == S::zero() {
                if f1 != f2 {
                    return Err(Error::DuplicateSample {
                        x: x1.as_f64(),
                        t: t1.as_f64(),
                    });
                }
                continue;
            }
            let denom = dx.powf(alpha_x) + dt.powf(alpha_t);
            sup = sup.max((f1 - f2).abs() / denom);
        }
    }
    Ok(sup)
}

/// Samples of the piecewise-linear `rho^3` interpolant at every retained
/// (node, time-level) pair of a 1D trajectory.
pub fn rho3_interpolant_samples<S: Scalar>(traj: &Trajectory<S>) -> Vec<(S, S, S)> {
    let grid = traj.data().grid();
    let tau = traj.tau();
    let mut samples = Vec::new();
    for (k, state) in traj.states().iter().enumerate() {
        let t = tau * cast::<S>(k as f64);
        for id in 0..grid.node_count() {
            let r = state.rho.value(id);
            samples.push((grid.coords(id)[0], t, r * r * r));
        }
    }
    samples
}

// ---------------------------------------------------------------------------
// Interpolant gap identities
// ---------------------------------------------------------------------------

/// Results of the interpolant-gap audit: the time-derivative identity for
/// `u~ - u-`, the squared-gap identity for `rho~ - rho-`, and the uniform
/// `tau^(1/4)` bound on the `rho^3` interpolant gap.
#[derive(Debug, Clone, Copy)]
pub struct InterpolantGapReport<S: Scalar> {
    /// Largest relative defect of `|u~ - u-|_L2 = |t - t_k| |du~/dt|_L2`.
    pub uls_identity_rel_gap: S,
    /// Whether `|u~ - u-|_L2 <= tau |du~/dt|_L2` held at every sample.
    pub uls_bound_ok: bool,
    /// `int int (rho~ - rho-)^2`, by interval-exact Simpson quadrature.
    pub rls_lhs: S,
    /// `tau^2 int int (d rho~/dt)^2`.
    pub rls_rhs: S,
    /// Relative defect of the identity `lhs = rhs / 3`.
    pub rls_identity_rel_gap: S,
    /// `sup |c~ - rho-^3| = max_k sup |rho_k^3 - rho_{k-1}^3|`.
    pub sup_gap_rho3: S,
    /// Sampled Hölder modulus of the `rho^3` interpolant.
    pub holder_modulus_c: S,
    /// `|d_t c~|_{L2} + sup_t |c~|_{W22}`.
    pub norm_factor: S,
    /// `calibration * norm_factor * tau^(1/4)`.
    pub tau_quarter_bound: S,
    pub bound_ok: bool,
}

fn l2_norm<S: Scalar>(f: &ScalarField<S>) -> S {
    f.map(|v| v * v).expect("squares are finite").integrate().sqrt()
}

fn w22_norm<S: Scalar>(f: &ScalarField<S>) -> S {
    let grid = f.grid().clone();
    let sq = f.map(|v| v * v).expect("squares are finite").integrate();
    let grad = f.gradient_square_integral(None).expect("no weight");
    let lap = f.laplacian();
    let lap_sq: S = grid
        .interior_nodes()
        .iter()
        .map(|&id| lap.raw()[id] * lap.raw()[id])
        .sum::<S>()
        * grid.cell_volume();
    (sq + grad + lap_sq).sqrt()
}

/// Audit the interpolant gap identities on a converged trajectory;
/// `calibration` is the frozen Hölder constant ([`HOLDER_CALIBRATION`]).
pub fn interpolant_gap_report<S: Scalar>(
    traj: &Trajectory<S>,
    calibration: S,
) -> Result<InterpolantGapReport<S>> {
    let tau = traj.tau();
    let j = traj.step_count();
    let third = S::one() / cast::<S>(3.0);

    // u-interpolant identity at sampled in-interval times.
    let mut uls_rel = S::zero();
    let mut uls_ok = true;
    for k in 1..=j {
        let dudt = du_dt_on_interval(traj, k)?;
        let dudt_l2 = l2_norm(&dudt);
        let t_k = tau * cast::<S>(k as f64);
        for frac in [0.25, 0.5, 1.0] {
            let t = tau * (cast::<S>((k - 1) as f64) + cast::<S>(frac));
            let interp = eval_interpolants(traj, t)?;
            let gap = l2_norm(&interp.u_tilde.zip_map(&interp.u_bar, |a, b| a - b)?);
            let expected = (t_k - t).abs() * dudt_l2;
            let scale = S::one() + gap.max(expected);
            uls_rel = uls_rel.max((gap - expected).abs() / scale);
            if gap > tau * dudt_l2 + cast::<S>(1e-12) * scale {
                uls_ok = false;
            }
        }
    }

    // rho-interpolant squared gap: Simpson in time is exact because the
    // spatial integral of (rho~ - rho-)^2 is quadratic on each interval.
    let mut rls_lhs = S::zero();
    let mut rls_rhs = S::zero();
    let sixth = S::one() / cast::<S>(6.0);
    for k in 1..=j {
        let drho = drho_dt_on_interval(traj, k)?;
        let drho_sq = drho.map(|v| v * v)?.integrate();
        rls_rhs += tau * tau * tau * drho_sq;
        let mut g = [S::zero(); 3];
        for (slot, frac) in [(0usize, 1e-9), (1, 0.5), (2, 1.0)] {
            let t = tau * (cast::<S>((k - 1) as f64) + cast::<S>(frac));
            let interp = eval_interpolants(traj, t)?;
            let diff = interp.rho_tilde.zip_map(&interp.rho_bar, |a, b| a - b)?;
            g[slot] = diff.map(|v| v * v)?.integrate();
        }
        rls_lhs += tau * sixth * (g[0] + cast::<S>(4.0) * g[1] + g[2]);
    }
    let rls_scale = S::one() + rls_lhs.max(rls_rhs);
    let rls_rel = (rls_lhs - rls_rhs * third).abs() / rls_scale;

    // Uniform bound on the rho^3 interpolant gap.
    let mut sup_gap = S::zero();
    for k in 1..=j {
        let gap = traj
            .state(k)
            .rho
            .zip_map(&traj.state(k - 1).rho, |a, b| a * a * a - b * b * b)?
            .sup_norm();
        sup_gap = sup_gap.max(gap);
    }
    let samples = rho3_interpolant_samples(traj);
    let modulus = holder_modulus(&samples, cast::<S>(0.5), cast::<S>(0.25))?;
    let mut dt_c_sq = S::zero();
    let mut w22_max = S::zero();
    for k in 0..=j {
        let rho3 = traj.state(k).rho.map(|r| r * r * r)?;
        w22_max = w22_max.max(w22_norm(&rho3));
        if k > 0 {
            let diff = traj
                .state(k)
                .rho
                .zip_map(&traj.state(k - 1).rho, |a, b| a * a * a - b * b * b)?;
            let dquot = diff.map(|v| v / tau)?;
            dt_c_sq += tau * dquot.map(|v| v * v)?.integrate();
        }
    }
    let norm_factor = dt_c_sq.sqrt() + w22_max;
    let tau_quarter_bound = calibration * norm_factor * tau.powf(cast::<S>(0.25));
    let bound_ok = sup_gap <= tau_quarter_bound && modulus <= calibration * norm_factor;

    Ok(InterpolantGapReport {
        uls_identity_rel_gap: uls_rel,
        uls_bound_ok: uls_ok,
        rls_lhs,
        rls_rhs,
        rls_identity_rel_gap: rls_rel,
        sup_gap_rho3: sup_gap,
        holder_modulus_c: modulus,
        norm_factor,
        tau_quarter_bound,
        bound_ok,
    })
}

// ---------------------------------------------------------------------------
// Elementary inequalities
// ---------------------------------------------------------------------------

/// Monotone catalog for the antiderivative inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneFunction {
    /// `exp(s)`, increasing.
    Exp,
    /// `s^3`, increasing.
    Cube,
    /// `exp(-s)`, decreasing.
    NegExp,
}

impl MonotoneFunction {
    pub fn increasing(self) -> bool {
        !matches!(self, MonotoneFunction::NegExp)
    }

    fn eval<S: Scalar>(self, s: S) -> S {
        match self {
            MonotoneFunction::Exp => s.exp(),
            MonotoneFunction::Cube => s * s * s,
            MonotoneFunction::NegExp => (-s).exp(),
        }
    }

    fn antiderivative<S: Scalar>(self, s: S) -> S {
        match self {
            MonotoneFunction::Exp => s.exp(),
            MonotoneFunction::Cube => s * s * s * s / cast::<S>(4.0),
            MonotoneFunction::NegExp => -(-s).exp(),
        }
    }
}

/// One of the four elementary inequalities underpinning the estimates.
#[derive(Debug, Clone)]
pub enum Lemma21Case<S: Scalar> {
    /// `x . (x - y) >= (|x|^2 - |y|^2) / 2` for vectors.
    L1 { x: Vec<S>, y: Vec<S> },
    /// `f(s)(s - t) >= F(s) - F(t)` for increasing `f` (reversed when
    /// decreasing), `F` an antiderivative.
    L2 { f: MonotoneFunction, s: S, t: S },
    /// `(exp(-s) - exp(-t)) exp(3s) <= -(exp(2s) - exp(2t)) / 2`.
    L3 { s: S, t: S },
    /// `(a^3 - b^3)(1/a - 1/b) <= -3 (a - b)^2` for positive `a`, `b`.
    L4 { a: S, b: S },
}

/// Both sides of an inequality, evaluated exactly as written.
#[derive(Debug, Clone, Copy)]
pub struct InequalityCheck<S: Scalar> {
    pub lhs: S,
    pub rhs: S,
    /// True when the stated relation holds for the evaluated sides.
    pub holds: bool,
    /// True for `lhs >= rhs` cases, false for `lhs <= rhs`.
    pub greater_or_equal: bool,
}

pub fn check_lemma21<S: Scalar>(case: &Lemma21Case<S>) -> Result<InequalityCheck<S>> {
    match case {
        Lemma21Case::L1 { x, y } => {
            if x.len() != y.len() || x.is_empty() {
                return Err(Error::DomainViolation(
                    "L1 needs equal-length nonempty vectors".into(),
                ));
            }
            let dot: S = x.iter().zip(y).map(|(&a, &b)| a * (a - b)).sum();
            let half = cast::<S>(0.5);
            let norms: S = x.iter().map(|&a| a * a).sum::<S>() - y.iter().map(|&b| b * b).sum::<S>();
            Ok(InequalityCheck {
                lhs: dot,
                rhs: half * norms,
                holds: dot >= half * norms,
                greater_or_equal: true,
            })
        }
        Lemma21Case::L2 { f, s, t } => {
            let lhs = f.eval(*s) * (*s - *t);
            let rhs = f.antiderivative(*s) - f.antiderivative(*t);
            let holds = if f.increasing() { lhs >= rhs } else { lhs <= rhs };
            Ok(InequalityCheck {
                lhs,
                rhs,
                holds,
                greater_or_equal: f.increasing(),
            })
        }
        Lemma21Case::L3 { s, t } => {
            let three = cast::<S>(3.0);
            let two = cast::<S>(2.0);
            let half = cast::<S>(0.5);
            let lhs = ((-*s).exp() - (-*t).exp()) * (three * *s).exp();
            let rhs = -half * ((two * *s).exp() - (two * *t).exp());
            Ok(InequalityCheck {
                lhs,
                rhs,
                holds: lhs <= rhs,
                greater_or_equal: false,
            })
        }
        Lemma21Case::L4 { a, b } => {
            if !(*a > S::zero() && *b > S::zero()) {
                return Err(Error::DomainViolation(format!(
                    "L4 needs positive arguments, got a = {a}, b = {b}"
                )));
            }
            let three = cast::<S>(3.0);
            let lhs = (*a * *a * *a - *b * *b * *b) * (a.recip() - b.recip());
            let rhs = -three * (*a - *b) * (*a - *b);
            Ok(InequalityCheck {
                lhs,
                rhs,
                holds: lhs <= rhs,
                greater_or_equal: false,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::problem::{ProblemData, StepperConfig};
    use crate::stepper::run_rothe;

    fn steady_trajectory(cells: usize, j: usize) -> Trajectory<f64> {
        let grid = Grid::new_1d(1.0, cells).unwrap();
        let u0 = ScalarField::from_fn(&grid, |x, _| 0.5 * x * x).unwrap();
        let b1 = ScalarField::constant(&grid, 1.0).unwrap();
        let data = ProblemData::new(u0.clone(), b1, 1.0, u0).unwrap();
        run_rothe(&data, 0.5, j, &StepperConfig::default()).unwrap()
    }

    fn ramp_trajectory(cells: usize, j: usize, t_final: f64) -> Trajectory<f64> {
        let grid = Grid::new_1d(1.0, cells).unwrap();
        let u0 = ScalarField::from_fn(&grid, |x, _| 0.5 * x * x + x * x * x / 12.0).unwrap();
        let b1 = ScalarField::from_fn(&grid, |x, _| 1.0 + 0.5 * x).unwrap();
        let data = ProblemData::new(u0.clone(), b1, 1.0, u0).unwrap();
        run_rothe(&data, t_final, j, &StepperConfig::default()).unwrap()
    }

    fn bump() -> TestFunction<f64> {
        TestFunction::new(
            "bump",
            |x, _| x[0] * (1.0 - x[0]),
            |x, _| [1.0 - 2.0 * x[0], 0.0],
            |_, _| -2.0,
            true,
        )
    }

    #[test]
    fn steady_mass_like_is_twice_the_domain() {
        let traj = steady_trajectory(16, 6);
        let report = apriori_report(&traj).unwrap();
        for step in &report.steps {
            assert!((step.mass_like - 2.0).abs() < 1e-9, "k = {}", step.k);
            assert!(step.du_dt_sq < 1e-18);
        }
        assert!(report.steps.last().unwrap().cum_dt_rho_sq < 1e-18);
        assert!(report.min_box_margin() >= 0.0);
    }

    #[test]
    fn cumulative_series_are_nondecreasing() {
        let traj = ramp_trajectory(24, 10, 0.5);
        let report = apriori_report(&traj).unwrap();
        for pair in report.steps.windows(2) {
            assert!(pair[1].cum_lap_rho3_sq >= pair[0].cum_lap_rho3_sq);
            assert!(pair[1].cum_tau_grad_psi >= pair[0].cum_tau_grad_psi);
            assert!(pair[1].cum_grad_rho_sq >= pair[0].cum_grad_rho_sq);
            assert!(pair[1].cum_dt_rho_sq >= pair[0].cum_dt_rho_sq);
        }
    }

    #[test]
    fn refinement_keeps_apriori_quantities_bounded() {
        let coarse = apriori_report(&ramp_trajectory(24, 8, 0.4)).unwrap().summary();
        let fine = apriori_report(&ramp_trajectory(24, 16, 0.4)).unwrap().summary();
        for ((name, c), (_, f)) in coarse.quantities().iter().zip(fine.quantities().iter()) {
            assert!(
                *f <= 1.2 * *c + 1e-12,
                "{name}: fine {f} vs coarse {c}"
            );
        }
    }

    #[test]
    fn weak_residual_of_zero_test_function_vanishes() {
        let traj = ramp_trajectory(12, 4, 0.2);
        let zero = TestFunction::new("zero", |_, _| 0.0, |_, _| [0.0, 0.0], |_, _| 0.0, true);
        let out = weak_residual(&traj, &zero, WeakMode::EqualityDef12).unwrap();
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn weak_residual_vanishes_on_the_steady_state() {
        let traj = steady_trajectory(16, 6);
        let out = weak_residual(&traj, &bump(), WeakMode::EqualityDef12).unwrap();
        assert!(out.value.abs() < 1e-9, "value {}", out.value);
    }

    #[test]
    fn weak_residual_is_linear_in_the_test_function() {
        let traj = ramp_trajectory(16, 6, 0.3);
        let xi1 = bump();
        let xi2 = TestFunction::new(
            "sine2",
            |x: [f64; 2], _| (core::f64::consts::PI * x[0]).sin().powi(2),
            |x, _| {
                let p = core::f64::consts::PI;
                [p * (2.0 * p * x[0]).sin(), 0.0]
            },
            |x, _| {
                let p = core::f64::consts::PI;
                2.0 * p * p * (2.0 * p * x[0]).cos()
            },
            true,
        );
        let r1 = weak_residual(&traj, &xi1, WeakMode::EqualityDef12).unwrap();
        let r2 = weak_residual(&traj, &xi2, WeakMode::EqualityDef12).unwrap();
        let sum = weak_residual(&traj, &bump().add(xi2), WeakMode::EqualityDef12).unwrap();
        let scale = 1.0 + r1.value.abs() + r2.value.abs();
        assert!(((r1.value + r2.value) - sum.value).abs() < 1e-11 * scale);
    }

    #[test]
    fn inequality_mode_is_certified_by_its_slack() {
        let traj = ramp_trajectory(32, 16, 0.5);
        let out = weak_residual(&traj, &bump(), WeakMode::InequalityThm12).unwrap();
        let slack = out.tol_slack.unwrap();
        println!(
            "weak inequality: value {:.3e} <= slack {:.3e} (tau {:.1e}, comm {:.1e}, res {:.1e})",
            out.value, slack, out.tau_term, out.commutator_term, out.residual_term
        );
        assert!(out.value <= slack);
    }

    #[test]
    fn inequality_mode_rejects_signed_test_functions() {
        let traj = ramp_trajectory(12, 2, 0.1);
        let signed = TestFunction::new(
            "signed",
            |x, _| x[0] * (1.0 - x[0]) * (0.5 - x[0]),
            |x, _| [(1.0 - 2.0 * x[0]) * (0.5 - x[0]) - x[0] * (1.0 - x[0]), 0.0],
            |x, _| -2.0 * (0.5 - x[0]) - 2.0 * (1.0 - 2.0 * x[0]),
            false,
        );
        assert!(matches!(
            weak_residual(&traj, &signed, WeakMode::InequalityThm12),
            Err(Error::FlagViolation { .. })
        ));
        // Equality mode accepts it.
        assert!(weak_residual(&traj, &signed, WeakMode::EqualityDef12).is_ok());
    }

    #[test]
    fn test_function_with_nonvanishing_trace_is_rejected() {
        let traj = ramp_trajectory(12, 2, 0.1);
        let bad = TestFunction::new("one", |_, _| 1.0, |_, _| [0.0, 0.0], |_, _| 0.0, true);
        assert!(matches!(
            weak_residual(&traj, &bad, WeakMode::EqualityDef12),
            Err(Error::FlagViolation { .. })
        ));
    }

    #[test]
    fn holder_modulus_basics() {
        // Constant data has modulus zero.
        let flat: Vec<(f64, f64, f64)> = (0..10).map(|i| (i as f64 * 0.1, 0.0, 2.0)).collect();
        assert_eq!(holder_modulus(&flat, 0.5, 0.25).unwrap(), 0.0);
        // f(x) = x on the unit interval: |dx| <= |dx|^{1/2}.
        let line: Vec<(f64, f64, f64)> =
            (0..11).map(|i| (i as f64 * 0.1, 0.0, i as f64 * 0.1)).collect();
        let m = holder_modulus(&line, 0.5, 0.25).unwrap();
        assert!(m <= 1.0 + 1e-12);
        // Duplicate points with conflicting values are an error.
        let dup = vec![(0.0, 0.0, 1.0), (0.0, 0.0, 2.0)];
        assert!(matches!(
            holder_modulus(&dup, 0.5, 0.25),
            Err(Error::DuplicateSample { .. })
        ));
    }

    #[test]
    fn interpolant_gaps_vanish_on_the_steady_state() {
        let traj = steady_trajectory(12, 4);
        let report = interpolant_gap_report(&traj, HOLDER_CALIBRATION).unwrap();
        assert!(report.rls_lhs < 1e-18);
        assert!(report.sup_gap_rho3 < 1e-10);
        assert!(report.uls_bound_ok);
    }

    #[test]
    fn single_step_gap_identity_is_equality() {
        let traj = ramp_trajectory(12, 1, 0.05);
        let report = interpolant_gap_report(&traj, HOLDER_CALIBRATION).unwrap();
        assert!(report.uls_identity_rel_gap < 1e-12);
        assert!(report.rls_identity_rel_gap < 1e-12);
    }

    #[test]
    fn generic_gap_identities_hold_exactly() {
        let traj = ramp_trajectory(24, 12, 0.4);
        let report = interpolant_gap_report(&traj, HOLDER_CALIBRATION).unwrap();
        assert!(report.uls_identity_rel_gap < 1e-12);
        assert!(report.rls_identity_rel_gap < 1e-12);
        assert!(report.uls_bound_ok);
        assert!(report.rls_lhs <= report.rls_rhs + 1e-12 * (1.0 + report.rls_rhs));
        assert!(report.bound_ok, "{report:?}");
    }

    #[test]
    fn holder_calibration_reference() {
        // The frozen tiny march behind HOLDER_CALIBRATION. The measured
        // ratio must stay below the frozen constant without being loose by
        // more than the documented headroom factor of 4.
        let traj = ramp_trajectory(16, 8, 0.4);
        let report = interpolant_gap_report(&traj, HOLDER_CALIBRATION).unwrap();
        let measured = report.holder_modulus_c / report.norm_factor;
        println!("holder calibration measured ratio: {measured:.4}");
        assert!(measured <= HOLDER_CALIBRATION);
        assert!(HOLDER_CALIBRATION <= 4.0 * measured);
    }

    #[test]
    fn gap_shrinks_under_time_refinement() {
        let coarse = interpolant_gap_report(&ramp_trajectory(24, 4, 0.4), HOLDER_CALIBRATION)
            .unwrap();
        let fine = interpolant_gap_report(&ramp_trajectory(24, 64, 0.4), HOLDER_CALIBRATION)
            .unwrap();
        let shrink = coarse.sup_gap_rho3 / fine.sup_gap_rho3;
        println!("rho^3 gap shrink over 16x time refinement: {shrink:.2}");
        assert!(shrink >= 1.8);
        assert!(coarse.bound_ok && fine.bound_ok);
    }

    #[test]
    fn lemma_worked_examples() {
        // L4 with a = 1, b = 2: (1 - 8)(1 - 1/2) = -3.5 <= -3.
        let l4 = check_lemma21(&Lemma21Case::L4 { a: 1.0, b: 2.0 }).unwrap();
        assert_eq!(l4.lhs, -3.5);
        assert_eq!(l4.rhs, -3.0);
        assert!(l4.holds);
        // Equality cases.
        let l1 = check_lemma21(&Lemma21Case::L1 {
            x: vec![1.0, -2.0],
            y: vec![1.0, -2.0],
        })
        .unwrap();
        assert_eq!(l1.lhs, 0.0);
        assert_eq!(l1.rhs, 0.0);
        assert!(l1.holds);
        let l3 = check_lemma21(&Lemma21Case::L3 { s: 0.7, t: 0.7 }).unwrap();
        assert_eq!(l3.lhs, 0.0);
        assert!(l3.holds);
        // Domain violation.
        assert!(check_lemma21(&Lemma21Case::L4 { a: -1.0, b: 2.0 }).is_err());
    }

    #[test]
    fn lemma_random_sampling() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..10_000 {
            let dim = rng.random_range(1..=4);
            let x: Vec<f64> = (0..dim).map(|_| 20.0 * (rng.random::<f64>() - 0.5)).collect();
            let y: Vec<f64> = (0..dim).map(|_| 20.0 * (rng.random::<f64>() - 0.5)).collect();
            assert!(check_lemma21(&Lemma21Case::L1 { x, y }).unwrap().holds);

            let s = 40.0 * (rng.random::<f64>() - 0.5);
            let t = 40.0 * (rng.random::<f64>() - 0.5);
            assert!(check_lemma21(&Lemma21Case::L3 { s, t }).unwrap().holds);

            let a = 10f64.powf(9.0 * rng.random::<f64>() - 6.0);
            let b = 10f64.powf(9.0 * rng.random::<f64>() - 6.0);
            assert!(check_lemma21(&Lemma21Case::L4 { a, b }).unwrap().holds);

            let f = match rng.random_range(0..3) {
                0 => MonotoneFunction::Exp,
                1 => MonotoneFunction::Cube,
                _ => MonotoneFunction::NegExp,
            };
            let s2 = 10.0 * (rng.random::<f64>() - 0.5);
            let t2 = 10.0 * (rng.random::<f64>() - 0.5);
            assert!(check_lemma21(&Lemma21Case::L2 { f, s: s2, t: t2 }).unwrap().holds);
        }
    }
}
