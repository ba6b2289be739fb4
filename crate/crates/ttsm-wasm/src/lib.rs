//! Browser demo bindings: solve a torus problem, reconstruct its trajectory
//! against an RK4 integration, and compute the response spectrum. Each export
//! takes plain strings/numbers and returns a JSON string so the page needs no
//! generated glue beyond the wasm-bindgen loader.
//!
//! Grids here are small (the demo caps them at 15 points per axis), so the
//! pure-Rust dense path of the core crate is plenty.

use std::sync::Arc;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ttsm::collocation::ResidualSystem;
use ttsm::problems::{
    duffing, Duffing, DuffingParams, LinearOscillator, LinearOscillatorParams,
};
use ttsm::reference::{compute_spectrum, rk4_integrate, time_rhs, torus_to_time};
use ttsm::solver::{homotopy_solve, newton_solve, NewtonConfig};
use ttsm::{AngularGrid, TorusField, TorusProblem, TtsmError};

const MAX_DEMO_GRID: usize = 15;

struct DemoProblem {
    problem: Arc<dyn TorusProblem>,
    field: TorusField,
    residual_history: Vec<f64>,
    newton_iterations: usize,
}

fn parse_omega(expr: &str) -> Result<f64, String> {
    let value = ttsm::expr::eval(expr).map_err(|e| e.to_string())?;
    if !(value > 0.0) {
        return Err(format!("frequency '{expr}' must evaluate to a positive number"));
    }
    Ok(value)
}

fn solve(
    problem_name: &str,
    omega1: &str,
    omega2: &str,
    n1: usize,
    n2: usize,
    alpha: f64,
) -> Result<DemoProblem, String> {
    if n1 > MAX_DEMO_GRID || n2 > MAX_DEMO_GRID {
        return Err(format!("demo grids are capped at {MAX_DEMO_GRID} points per axis"));
    }
    let w1 = parse_omega(omega1)?;
    let w2 = parse_omega(omega2)?;
    let grid = AngularGrid::new(&[w1, w2], &[n1, n2]).map_err(|e| e.to_string())?;
    let config = NewtonConfig::default();

    match problem_name {
        "linear" => {
            let problem = Arc::new(LinearOscillator::new(LinearOscillatorParams::new(w1, w2)));
            let sys = ResidualSystem::new(problem.clone(), grid.clone())
                .map_err(|e| e.to_string())?;
            let report = newton_solve(&sys, &TorusField::zeros(grid, 1), &config)
                .map_err(|e| e.to_string())?;
            if !report.converged {
                return Err("solve did not converge".into());
            }
            Ok(DemoProblem {
                problem,
                field: report.solution,
                residual_history: report.residual_history,
                newton_iterations: report.newton_iterations,
            })
        }
        "duffing" => {
            let params = DuffingParams {
                alpha,
                omega1: w1,
                omega2: w2,
                ..DuffingParams::default()
            };
            let problem = Arc::new(Duffing::new(params).map_err(|e| e.to_string())?);
            let report = homotopy_solve(
                |overrides: &ttsm::solver::ParamSet| {
                    Ok::<Arc<dyn TorusProblem>, TtsmError>(Arc::new(Duffing::new(
                        params.with_overrides(overrides)?,
                    )?))
                },
                &duffing::standard_schedule(&params),
                &grid,
                &config,
            )
            .map_err(|e| e.to_string())?;
            Ok(DemoProblem {
                problem,
                field: report.solution,
                residual_history: report.residual_history,
                newton_iterations: report.newton_iterations,
            })
        }
        other => Err(format!("unknown demo problem '{other}'")),
    }
}

#[derive(Serialize)]
struct FieldResult {
    n1: usize,
    n2: usize,
    newton_iterations: usize,
    residual_history: Vec<f64>,
    /// Component-0 nodal values, row-major over (theta2, theta1).
    values: Vec<Vec<f64>>,
    min: f64,
    max: f64,
}

/// Solves the problem and returns the component-0 torus field as a heatmap
/// matrix plus solver diagnostics.
#[wasm_bindgen]
pub fn solve_field(
    problem: &str,
    omega1: &str,
    omega2: &str,
    n1: usize,
    n2: usize,
    alpha: f64,
) -> Result<String, JsValue> {
    solve_field_impl(problem, omega1, omega2, n1, n2, alpha).map_err(err_js)
}

fn solve_field_impl(
    problem: &str,
    omega1: &str,
    omega2: &str,
    n1: usize,
    n2: usize,
    alpha: f64,
) -> Result<String, String> {
    let demo = solve(problem, omega1, omega2, n1, n2, alpha)?;
    let mut values = vec![vec![0.0; n1]; n2];
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (m, row) in values.iter_mut().enumerate() {
        for (l, slot) in row.iter_mut().enumerate() {
            let v = demo.field.value(&[l, m], 0);
            *slot = v;
            min = min.min(v);
            max = max.max(v);
        }
    }
    let result = FieldResult {
        n1,
        n2,
        newton_iterations: demo.newton_iterations,
        residual_history: demo.residual_history,
        values,
        min,
        max,
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SeriesResult {
    times: Vec<f64>,
    torus: Vec<f64>,
    reference: Vec<f64>,
}

/// Reconstructs the trajectory from the torus field and integrates the same
/// problem with RK4 from a zero initial state, for overlay plotting.
#[wasm_bindgen]
pub fn reconstruct(
    problem: &str,
    omega1: &str,
    omega2: &str,
    n1: usize,
    n2: usize,
    alpha: f64,
    t_max: f64,
    samples: usize,
) -> Result<String, JsValue> {
    reconstruct_impl(problem, omega1, omega2, n1, n2, alpha, t_max, samples).map_err(err_js)
}

#[allow(clippy::too_many_arguments)]
fn reconstruct_impl(
    problem: &str,
    omega1: &str,
    omega2: &str,
    n1: usize,
    n2: usize,
    alpha: f64,
    t_max: f64,
    samples: usize,
) -> Result<String, String> {
    if !(t_max > 0.0) || samples < 2 || samples > 20_000 {
        return Err("need t_max > 0 and 2..=20000 samples".into());
    }
    let demo = solve(problem, omega1, omega2, n1, n2, alpha)?;
    let times: Vec<f64> = (0..samples)
        .map(|i| t_max * i as f64 / (samples - 1) as f64)
        .collect();
    let torus = torus_to_time(&demo.field, &times);
    let freqs = demo.field.grid().frequencies().to_vec();
    let q0 = demo.problem.initial_state();
    let rk4 = rk4_integrate(
        time_rhs(demo.problem.as_ref(), &freqs),
        &q0,
        (0.0, t_max),
        (samples - 1).max(1) * 4,
    )
    .map_err(|e| e.to_string())?;
    let stride = (rk4.len() - 1) / (samples - 1);
    let result = SeriesResult {
        times: times.clone(),
        torus: (0..samples).map(|i| torus.states()[[i, 0]]).collect(),
        reference: (0..samples).map(|i| rk4.states()[[i * stride, 0]]).collect(),
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SpectrumResult {
    frequencies: Vec<f64>,
    amplitudes: Vec<f64>,
    peaks: Vec<(f64, f64)>,
    resolution: f64,
}

/// Spectrum of the torus reconstruction over `[cut, t_max]`.
#[wasm_bindgen]
pub fn spectrum(
    problem: &str,
    omega1: &str,
    omega2: &str,
    n1: usize,
    n2: usize,
    alpha: f64,
    t_max: f64,
    cut: f64,
) -> Result<String, JsValue> {
    spectrum_impl(problem, omega1, omega2, n1, n2, alpha, t_max, cut).map_err(err_js)
}

#[allow(clippy::too_many_arguments)]
fn spectrum_impl(
    problem: &str,
    omega1: &str,
    omega2: &str,
    n1: usize,
    n2: usize,
    alpha: f64,
    t_max: f64,
    cut: f64,
) -> Result<String, String> {
    if !(t_max > cut) || cut < 0.0 {
        return Err("need 0 <= cut < t_max".into());
    }
    let demo = solve(problem, omega1, omega2, n1, n2, alpha)?;
    let samples = 4096;
    let times: Vec<f64> = (0..samples)
        .map(|i| t_max * i as f64 / (samples - 1) as f64)
        .collect();
    let series = torus_to_time(&demo.field, &times);
    let spec = compute_spectrum(&series, 0, (cut, t_max)).map_err(|e| e.to_string())?;
    let result = SpectrumResult {
        resolution: spec.resolution(),
        peaks: spec.peaks(0.01),
        frequencies: spec.frequencies,
        amplitudes: spec.amplitudes,
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

/// Evaluates a frequency expression like `sqrt(2)` or `2*pi/100`, for axis
/// markers on the page.
#[wasm_bindgen]
pub fn eval_expr(input: &str) -> Result<f64, JsValue> {
    ttsm::expr::eval(input).map_err(err_js)
}

fn err_js(err: impl ToString) -> JsValue {
    JsValue::from_str(&err.to_string())
}
