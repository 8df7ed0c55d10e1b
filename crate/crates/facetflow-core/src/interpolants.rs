//! In-time reconstructions of a step sequence: piecewise-linear `u~`, `rho~`,
//! piecewise-constant `u-`, `psi-`, `rho-` (right-endpoint values on each
//! interval `(t_{k-1}, t_k]`), and the piecewise-linear interpolant of
//! `rho^3`.

use crate::field::ScalarField;
use crate::stepper::Trajectory;
use crate::{cast, Error, Result, Scalar};

/// All interpolants evaluated at one time.
#[derive(Debug, Clone)]
pub struct Interpolants<S: Scalar> {
    /// Interval index `k` with `t in (t_{k-1}, t_k]` (0 at `t = 0`).
    pub interval: usize,
    /// Barycentric weight `(t - t_{k-1}) / tau` within the interval.
    pub theta: S,
    pub u_tilde: ScalarField<S>,
    pub u_bar: ScalarField<S>,
    pub psi_bar: ScalarField<S>,
    pub rho_bar: ScalarField<S>,
    pub rho_tilde: ScalarField<S>,
    /// Piecewise-linear interpolant of `rho^3` (cubic in `psi`'s exponential).
    pub rho3_tilde: ScalarField<S>,
}

/// Locate the interval `(t_{k-1}, t_k]` containing `t`; returns `(k, theta)`
/// with `theta = (t - t_{k-1}) / tau`. `t = 0` maps to `(0, 1)`.
pub fn locate<S: Scalar>(traj: &Trajectory<S>, t: S) -> Result<(usize, S)> {
    let t_max = traj.final_time();
    let slack = cast::<S>(1e-12) * (S::one() + t_max);
    if t < -slack || t > t_max + slack {
        return Err(Error::TimeOutOfRange {
            t: t.as_f64(),
            t_max: t_max.as_f64(),
        });
    }
    if t <= S::zero() {
        return Ok((0, S::one()));
    }
    let tau = traj.tau();
    let j = traj.step_count();
    // Right-open intervals: t in (t_{k-1}, t_k].
    let ratio = (t / tau).ceil();
    let mut k = ratio.as_f64() as usize;
    k = k.clamp(1, j);
    // Guard the floating-point boundary t = t_{k-1} + eps.
    while k > 1 && t <= tau * cast::<S>((k - 1) as f64) {
        k -= 1;
    }
    let theta = (t - tau * cast::<S>((k - 1) as f64)) / tau;
    Ok((k, theta))
}

/// Evaluate every interpolant at time `t` in `[0, T]`.
pub fn eval_interpolants<S: Scalar>(traj: &Trajectory<S>, t: S) -> Result<Interpolants<S>> {
    let (k, theta) = locate(traj, t)?;
    if k == 0 {
        let s0 = traj.state(0);
        let rho3 = s0.rho.map(|r| r * r * r)?;
        return Ok(Interpolants {
            interval: 0,
            theta: S::one(),
            u_tilde: s0.u.clone(),
            u_bar: s0.u.clone(),
            psi_bar: s0.psi.clone(),
            rho_bar: s0.rho.clone(),
            rho_tilde: s0.rho.clone(),
            rho3_tilde: rho3,
        });
    }
    let lo = traj.state(k - 1);
    let hi = traj.state(k);
    let one_m = S::one() - theta;
    let blend = |a: &ScalarField<S>, b: &ScalarField<S>| a.zip_map(b, |x, y| one_m * x + theta * y);
    let u_tilde = blend(&lo.u, &hi.u)?;
    let rho_tilde = blend(&lo.rho, &hi.rho)?;
    let rho3_tilde = lo
        .rho
        .zip_map(&hi.rho, |a, b| one_m * a * a * a + theta * b * b * b)?;
    Ok(Interpolants {
        interval: k,
        theta,
        u_tilde,
        u_bar: hi.u.clone(),
        psi_bar: hi.psi.clone(),
        rho_bar: hi.rho.clone(),
        rho_tilde,
        rho3_tilde,
    })
}

/// `(u_k - u_{k-1}) / tau`, the time derivative of `u~` on interval `k >= 1`.
pub fn du_dt_on_interval<S: Scalar>(traj: &Trajectory<S>, k: usize) -> Result<ScalarField<S>> {
    let tau = traj.tau();
    traj.state(k)
        .u
        .zip_map(&traj.state(k - 1).u, move |a, b| (a - b) / tau)
}

/// `(rho_k - rho_{k-1}) / tau`, the time derivative of `rho~` on interval `k >= 1`.
pub fn drho_dt_on_interval<S: Scalar>(traj: &Trajectory<S>, k: usize) -> Result<ScalarField<S>> {
    let tau = traj.tau();
    traj.state(k)
        .rho
        .zip_map(&traj.state(k - 1).rho, move |a, b| (a - b) / tau)
}
