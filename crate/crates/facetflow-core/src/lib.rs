//! Finite-difference machinery for the crystal-surface relaxation equation
//! `du/dt = lap((lap u)^-3)` on intervals and axis-aligned rectangles.
//!
//! The height equation is marched in time by an implicit (Rothe) scheme: each
//! step solves a coupled pair of elliptic problems obtained from the
//! substitution `lap u = exp(-psi)`, which builds the sign constraint
//! `lap u > 0` into the unknown. The per-step system is solved by a damped
//! fixed-point iteration whose single sweep is a Poisson solve followed by a
//! variable-coefficient reaction-diffusion solve.
//!
//! Alongside the solver, the crate ships the verification surface:
//!
//! * [`rho`] — an independent semi-implicit solver for the slope equation
//!   `d(rho)/dt + rho^2 * d4(rho^3)/dx4 = 0` (1D), used for cross-validation
//!   through the identity `rho = 1 / lap u`;
//! * [`diagnostics`] — energy/entropy functionals, weak-form residuals with a
//!   certified slack bound, interpolant-gap identities, Hölder moduli, and the
//!   elementary inequalities the scheme's estimates rest on;
//! * [`oracle`] — a dense Newton solver for the per-step system, kept as a
//!   desk-scale reference implementation for tests.
//!
//! All numerics are generic over the scalar type via [`Scalar`]; concrete
//! `f64` aliases are exported at the crate root.

pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod field;
pub mod grid;
pub mod interpolants;
mod linalg;
pub mod oracle;
pub mod problem;
pub mod rho;
pub mod stepper;

pub use error::Error;
pub use field::{InteriorField, ScalarField};
pub use grid::Grid;
pub use problem::{ProblemData, StepperConfig};
pub use stepper::{StepState, Trajectory};

use core::fmt::{Debug, Display};
use core::iter::Sum;
use core::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating-point scalar the solvers are generic over: `f32` or `f64`.
pub trait Scalar:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy view as `f64`, used for error messages and reports.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand for pulling `f64` literals into the generic scalar type.
pub(crate) fn cast<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("f64 literal converts to scalar")
}

/// A computation that can fail with a solver or validation [`Error`].
pub type Result<T> = core::result::Result<T, Error>;

pub type Grid64 = Grid<f64>;
pub type Field64 = ScalarField<f64>;
pub type Problem64 = ProblemData<f64>;
pub type Trajectory64 = Trajectory<f64>;

pub type Grid32 = Grid<f32>;
pub type Field32 = ScalarField<f32>;
