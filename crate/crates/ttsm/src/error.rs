use thiserror::Error;

/// Errors produced by grid construction, operator assembly and the solvers.
#[derive(Debug, Error)]
pub enum TtsmError {
    #[error("even grid unsupported: axis {axis} has {count} collocation points, counts must be odd")]
    EvenGrid { axis: usize, count: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("axis {axis} out of range for a {num_axes}-torus")]
    AxisOutOfRange { axis: usize, num_axes: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("dense materialization of a {dim}x{dim} operator exceeds the cap of {cap}")]
    DenseTooLarge { dim: usize, cap: usize },

    #[error(
        "singular Jacobian factorization: the linearized system has a neutral direction; \
         declare a nodal anchor on the problem to remove it"
    )]
    SingularJacobian,

    #[error("homotopy stage {stage} failed to converge (residual {residual:.3e})")]
    HomotopyStageFailed { stage: usize, residual: f64 },

    #[error("non-finite state encountered at t = {time}")]
    NonFiniteState { time: f64 },

    #[error("sweep solve on a {grid}-point-per-axis grid did not converge (residual {residual:.3e})")]
    SweepGridFailed { grid: usize, residual: f64 },

    #[error("frequency mismatch: fields were computed for different torus frequencies")]
    FrequencyMismatch,

    #[error("spectrum window too short: {samples} samples, need at least 4")]
    WindowTooShort { samples: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
