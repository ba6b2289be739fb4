//! Nonlinear solution of the collocation system: restarted GMRES, a dense
//! direct path, damped Newton with a backtracking line search, and a homotopy
//! continuation driver for strongly nonlinear operating points.

pub mod gmres;
pub mod newton;

pub use gmres::{gmres_solve, GmresConfig, GmresOutcome};
pub use newton::{
    homotopy_solve, newton_solve, GmresStepStats, HomotopySchedule, LinearSolver, NewtonConfig,
    ParamSet, SolveReport,
};
