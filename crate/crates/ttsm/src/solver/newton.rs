//! Damped Newton iteration on the collocation residual and the homotopy
//! continuation driver.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::collocation::ResidualSystem;
use crate::error::TtsmError;
use crate::field::TorusField;
use crate::grid::AngularGrid;
use crate::linalg::solve_dense;
use crate::problem::TorusProblem;
use crate::solver::gmres::{gmres_solve, GmresConfig};

/// Linear-solver selection for the Newton update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolver {
    /// Dense direct up to [`NewtonConfig::dense_threshold`] unknowns, GMRES above.
    Auto,
    DenseDirect,
    Gmres,
}

/// Newton iteration controls. Tolerances are absolute on `‖r‖_∞`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub residual_tol: f64,
    pub max_newton_iters: usize,
    pub linear_solver: LinearSolver,
    /// Auto mode switches from dense direct to GMRES above this dimension.
    pub dense_threshold: usize,
    pub gmres_restart: usize,
    pub gmres_rel_tol: f64,
    pub gmres_max_outer: usize,
    /// Backtracking line search: at most this many step halvings.
    pub max_halvings: usize,
    /// Armijo margin: accept when `‖r(q+λΔ)‖_∞ ≤ (1 − c·λ)·‖r(q)‖_∞`.
    pub sufficient_decrease: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            max_newton_iters: 50,
            linear_solver: LinearSolver::Auto,
            dense_threshold: 2000,
            gmres_restart: 50,
            gmres_rel_tol: 1e-10,
            gmres_max_outer: 40,
            max_halvings: 25,
            sufficient_decrease: 1e-4,
        }
    }
}

impl NewtonConfig {
    fn validate(&self) -> Result<(), TtsmError> {
        if !(self.residual_tol > 0.0) || !(self.gmres_rel_tol > 0.0) {
            return Err(TtsmError::InvalidConfig(
                "tolerances must be positive".into(),
            ));
        }
        if self.gmres_restart == 0 {
            return Err(TtsmError::InvalidConfig("gmres_restart must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-Newton-step GMRES statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmresStepStats {
    pub newton_iter: usize,
    pub outer_iters: usize,
    pub total_iters: usize,
    pub rel_residual: f64,
}

/// Outcome of a Newton solve. `residual_history` holds `‖r‖_∞` at the initial
/// guess and after every accepted update, so its length is
/// `newton_iterations + 1`.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip_serializing)]
    pub solution: TorusField,
    pub converged: bool,
    pub final_residual_norm: f64,
    pub newton_iterations: usize,
    pub residual_history: Vec<f64>,
    pub gmres_stats: Vec<GmresStepStats>,
    /// Not serialized: output files must be byte-deterministic.
    #[serde(skip_serializing)]
    pub wall_time: f64,
    pub stall_reason: Option<String>,
}

fn inf_norm(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0, |a: f64, &x| a.max(x.abs()))
}

/// Solves `r(q̂) = 0` by damped Newton from `initial_guess`.
///
/// A line-search stall yields a clean non-converged report; a singular dense
/// factorization is an error (the problem likely needs a nodal anchor).
pub fn newton_solve(
    sys: &ResidualSystem,
    initial_guess: &TorusField,
    config: &NewtonConfig,
) -> Result<SolveReport, TtsmError> {
    config.validate()?;
    let start = Instant::now();
    let dim = sys.dim();
    let use_dense = match config.linear_solver {
        LinearSolver::DenseDirect => true,
        LinearSolver::Gmres => false,
        LinearSolver::Auto => dim <= config.dense_threshold,
    };

    let mut q = initial_guess.clone();
    let mut r = sys.residual(&q)?;
    let mut rnorm = inf_norm(&r);
    let mut history = vec![rnorm];
    let mut gmres_stats = Vec::new();
    let mut stall_reason = None;

    let mut iter = 0usize;
    while rnorm > config.residual_tol && iter < config.max_newton_iters {
        iter += 1;
        let rhs = r.mapv(|x| -x);
        let delta: Array1<f64> = if use_dense {
            let jac = sys.jacobian_dense(&q)?;
            let d = solve_dense(jac, &rhs)?;
            // a nearly singular factorization returns garbage without an
            // error; verify the update against the matrix-free operator
            let op = sys.jacobian_operator(&q)?;
            let mut check = vec![0.0; dim];
            op.apply(d.as_slice().unwrap(), &mut check);
            let bn = rhs.iter().map(|x| x * x).sum::<f64>().sqrt();
            let rn = check
                .iter()
                .zip(rhs.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if !rn.is_finite() || (bn > 0.0 && rn / bn > 1e-6) {
                return Err(TtsmError::SingularJacobian);
            }
            d
        } else {
            let op = sys.jacobian_operator(&q)?;
            let cfg = GmresConfig {
                restart: config.gmres_restart,
                rel_tol: config.gmres_rel_tol,
                max_outer: config.gmres_max_outer,
            };
            let out = gmres_solve(
                |v, o| op.apply(v, o),
                rhs.as_slice().unwrap(),
                &cfg,
            );
            gmres_stats.push(GmresStepStats {
                newton_iter: iter,
                outer_iters: out.outer_iters,
                total_iters: out.total_iters,
                rel_residual: out.rel_residual,
            });
            Array1::from(out.x)
        };

        // backtracking line search with halving
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=config.max_halvings {
            let mut trial = q.clone();
            for (t, d) in trial.values_mut().iter_mut().zip(delta.iter()) {
                *t += lambda * d;
            }
            let r_trial = sys.residual(&trial)?;
            let t_norm = inf_norm(&r_trial);
            if t_norm.is_finite()
                && t_norm <= (1.0 - config.sufficient_decrease * lambda) * rnorm
            {
                q = trial;
                r = r_trial;
                rnorm = t_norm;
                history.push(rnorm);
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            stall_reason = Some(format!(
                "line search stalled at Newton iteration {iter} after {} halvings \
                 (residual {rnorm:.3e}); the iterate may be outside the basin of \
                 attraction - consider a homotopy stage",
                config.max_halvings
            ));
            iter -= 1;
            break;
        }
    }

    if stall_reason.is_none() && rnorm > config.residual_tol {
        stall_reason = Some(format!(
            "reached max_newton_iters = {} with residual {rnorm:.3e}",
            config.max_newton_iters
        ));
    }

    Ok(SolveReport {
        solution: q,
        converged: rnorm <= config.residual_tol,
        final_residual_norm: rnorm,
        newton_iterations: iter,
        residual_history: history,
        gmres_stats,
        wall_time: start.elapsed().as_secs_f64(),
        stall_reason,
    })
}

/// Named parameter overrides defining one homotopy stage.
pub type ParamSet = BTreeMap<String, f64>;

/// An ordered list of parameter overrides from a weak operating point to the
/// target; the final stage must be the target itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomotopySchedule {
    stages: Vec<ParamSet>,
}

impl HomotopySchedule {
    pub fn new(stages: Vec<ParamSet>) -> Result<Self, TtsmError> {
        if stages.is_empty() {
            return Err(TtsmError::InvalidConfig(
                "homotopy schedule must have at least one stage".into(),
            ));
        }
        Ok(Self { stages })
    }

    pub fn single(target: ParamSet) -> Self {
        Self {
            stages: vec![target],
        }
    }

    pub fn stages(&self) -> &[ParamSet] {
        &self.stages
    }
}

/// Chains Newton solves through the schedule, warm-starting each stage from
/// the previous solution. Any non-converged stage aborts with its index.
pub fn homotopy_solve<F>(
    family: F,
    schedule: &HomotopySchedule,
    grid: &AngularGrid,
    config: &NewtonConfig,
) -> Result<SolveReport, TtsmError>
where
    F: Fn(&ParamSet) -> Result<Arc<dyn TorusProblem>, TtsmError>,
{
    let mut current: Option<TorusField> = None;
    let mut last_report = None;
    for (stage, params) in schedule.stages().iter().enumerate() {
        let problem = family(params)?;
        let sys = ResidualSystem::new(problem, grid.clone())?;
        let guess = match &current {
            Some(field) => field.clone(),
            None => TorusField::zeros(grid.clone(), sys.state_dim()),
        };
        let report = newton_solve(&sys, &guess, config)?;
        if !report.converged {
            return Err(TtsmError::HomotopyStageFailed {
                stage,
                residual: report.final_residual_norm,
            });
        }
        current = Some(report.solution.clone());
        last_report = Some(report);
    }
    Ok(last_report.expect("schedule is nonempty"))
}
