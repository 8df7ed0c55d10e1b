//! Error type shared by all solver and diagnostics modules.

/// Failure modes of grid construction, elliptic solves, time stepping, and
/// diagnostics. Messages carry the violated invariant by name so callers can
/// surface structured validation errors.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at node {node} in {context}")]
    NonFinite { context: &'static str, node: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("elliptic coefficient must be positive: a = {value} at node {node}")]
    NonPositiveCoefficient { node: usize, value: f64 },

    #[error("negative reaction coefficient c = {0}")]
    NegativeReaction(f64),

    #[error("linear solve did not meet tolerance: residual {residual} > {bound} after {iterations} iterations")]
    LinearSolve {
        iterations: usize,
        residual: f64,
        bound: f64,
    },

    #[error("singular linear system (pivot {pivot} in column {column})")]
    SingularSystem { column: usize, pivot: f64 },

    #[error("data validation failed ({hypothesis}): {detail}")]
    DataValidation {
        hypothesis: &'static str,
        detail: String,
    },

    #[error("invalid stepper configuration: {0}")]
    InvalidConfig(String),

    #[error("step {step} did not converge: residual {last_residual} after {iterations} iterations")]
    StepDidNotConverge {
        step: usize,
        iterations: usize,
        last_residual: f64,
        residual_history: Vec<f64>,
    },

    #[error("exponential overflow guard: |3 psi| reaches {max_abs} > {limit}")]
    OverflowGuard { max_abs: f64, limit: f64 },

    #[error("NaN detected in {0}")]
    NanDetected(&'static str),

    #[error("converged psi leaves its certified box at step {step}: psi in [{psi_min}, {psi_max}], box [-{m}, {l}]")]
    BoxBoundViolated {
        step: usize,
        psi_min: f64,
        psi_max: f64,
        m: f64,
        l: f64,
    },

    #[error("slope solver lost positivity at step {step}, node {node}: rho = {value}")]
    PositivityLost {
        step: usize,
        node: usize,
        value: f64,
    },

    #[error("time {t} outside trajectory range [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },

    #[error("time {t} does not align with a stored level (nearest {nearest})")]
    TimeNotAligned { t: f64, nearest: f64 },

    #[error("duplicate sample at (x, t) = ({x}, {t}) with differing values")]
    DuplicateSample { x: f64, t: f64 },

    #[error("test function violates required flag {flag}: {detail}")]
    FlagViolation { flag: &'static str, detail: String },

    #[error("inequality argument outside domain: {0}")]
    DomainViolation(String),
}
