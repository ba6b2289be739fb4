//! Quasi-periodic solutions of nonlinear ODE/PDE systems by Fourier
//! collocation on the k-torus.
//!
//! A trajectory driven by rationally independent frequencies `ω_1, …, ω_k`
//! never repeats, but it is the trace of a smooth field `q(θ_1, …, θ_k)` on
//! the k-torus along `θ_j = ω_j t`. That field satisfies the invariance
//! equation `Σ_j ω_j ∂_{θ_j} q = f(q, θ)`, which this crate discretizes by
//! tensor-product Fourier collocation and solves as a nonlinear algebraic
//! system:
//!
//! - [`spectral`]: differentiation matrices on one angle and their
//!   Kronecker-sum lifting to the stacked grid, plus trigonometric
//!   interpolation and discrete Fourier utilities;
//! - [`grid`] / [`field`] / [`problem`]: the collocation grid, the stacked
//!   nodal unknown, and the dynamical-system interface;
//! - [`collocation`]: residual and Jacobian assembly with nodal-anchor
//!   regularization for neutrally stable dynamics;
//! - [`solver`]: restarted GMRES, a dense direct path, damped Newton with a
//!   backtracking line search, and homotopy continuation;
//! - [`reference`](mod@reference): RK4 time integration, torus-to-time
//!   reconstruction, frequency spectra and fine-grid error norms;
//! - [`problems`]: forced linear oscillator, two-tone Duffing, a discretized
//!   nonlinear Klein-Gordon equation, and a three-tone linear case;
//! - [`studies`]: convergence sweeps with exponential-rate fits, the
//!   rational-surrogate (harmonic-balance style) comparison, and
//!   attractor/transient comparisons against time integration.
//!
//! Grids use odd node counts per axis; the solution error of smooth problems
//! decays exponentially in the per-axis grid size, so desk-scale grids like
//! 3×3 or 5×5 already reach engineering accuracy on the bundled problems.

pub mod collocation;
pub mod error;
pub mod expr;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod problem;
pub mod problems;
pub mod reference;
pub mod solver;
pub mod spectral;
pub mod studies;

pub use error::TtsmError;
pub use field::TorusField;
pub use grid::AngularGrid;
pub use problem::{Anchor, TorusProblem};
pub use solver::{newton_solve, NewtonConfig, SolveReport};
