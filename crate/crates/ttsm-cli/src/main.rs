//! `ttsm`: solve quasi-periodic ODE/PDE problems by Fourier collocation on
//! the k-torus, run grid-refinement studies, and export plot-ready data.

mod config;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde_json::json;

use ttsm::collocation::ResidualSystem;
use ttsm::problems::{duffing, Duffing, KleinGordon, LinearOscillator, ThreeToneLinear};
use ttsm::reference::{compute_spectrum, torus_to_time};
use ttsm::solver::{homotopy_solve, newton_solve, SolveReport};
use ttsm::studies::{
    attractor_comparison, convergence_sweep, sfhb_plan, sfhb_surrogate_solve, DuffingStudy,
    KleinGordonStudy, LinearOscillatorStudy, StudyProblem, DEFAULT_PEAK_THRESHOLD,
};
use ttsm::{AngularGrid, TorusField, TorusProblem, TtsmError};

use config::{error_exit_code, ProblemKind, RunConfig};
use output::OutputWriter;

#[derive(Parser)]
#[command(name = "ttsm", version, about = "Torus collocation solver for quasi-periodic systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Problem name: linear, duffing, kg or three_tone
    #[arg(long)]
    problem: Option<String>,

    /// Torus frequency, one flag per axis; accepts expressions like
    /// "sqrt(2)" or "2*pi/100"
    #[arg(long = "omega", value_name = "EXPR", action = ArgAction::Append)]
    omegas: Vec<String>,

    /// Collocation points per axis (odd), e.g. --grid 3 3
    #[arg(long, num_args = 1..)]
    grid: Vec<usize>,

    /// Problem parameter override key=value, repeatable; values accept
    /// expressions
    #[arg(long = "param", value_name = "KEY=EXPR", action = ArgAction::Append)]
    params: Vec<String>,

    /// TOML config file; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory
    #[arg(long)]
    out: Option<String>,

    /// Absolute residual tolerance (infinity norm)
    #[arg(long)]
    tol: Option<f64>,

    /// Maximum Newton iterations
    #[arg(long)]
    max_iters: Option<usize>,

    /// Linear solver: auto, dense or gmres
    #[arg(long)]
    linear_solver: Option<String>,

    /// Skip the problem's homotopy schedule and start Newton from zero
    #[arg(long)]
    no_homotopy: bool,

    /// Random seed recorded in the config hash (reserved for sampling-based
    /// diagnostics)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem on one grid; writes field.csv, report.json and
    /// series.csv
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Reconstruction horizon for series.csv
        #[arg(long)]
        tmax: Option<f64>,
        /// Samples in series.csv
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Grid-refinement sweep against a fine reference; writes
    /// convergence.csv and convergence.json
    Converge {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated odd grid sizes, e.g. 3,5,7
        #[arg(long, value_delimiter = ',')]
        grids: Vec<usize>,
        /// Reference grid size
        #[arg(long)]
        reference: Option<usize>,
        /// Parallel solves
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Supplemental-frequency harmonic-balance plan and surrogate solve;
    /// writes sfhb.json and surrogate.csv
    Sfhb {
        #[command(flatten)]
        common: CommonArgs,
        /// First tone frequency (expression)
        #[arg(long)]
        omega0: String,
        /// Second tone frequency (expression)
        #[arg(long)]
        omegaf: String,
        /// Continued-fraction denominator cap
        #[arg(long)]
        max_denominator: Option<u64>,
        /// Surrogate collocation points (odd, defaults to the plan's DOFs)
        #[arg(long)]
        points: Option<usize>,
    },
    /// Compare the torus solution against time integration; writes
    /// compare.json
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Integration span, two values
        #[arg(long, num_args = 2)]
        tspan: Vec<f64>,
        /// Transient cut time
        #[arg(long)]
        cut: Option<f64>,
        /// RK4 steps
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Spectrum of the torus reconstruction over a window; writes
    /// spectrum.csv and peaks.json
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Window start and end, two values
        #[arg(long, num_args = 2)]
        window: Vec<f64>,
        /// State component to analyze
        #[arg(long)]
        component: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version print and exit cleanly; usage errors exit 1
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Solver(err)) => {
            eprintln!("error: {err}");
            ExitCode::from(error_exit_code(&err) as u8)
        }
        Err(CliError::NonConverged) => ExitCode::from(2),
    }
}

enum CliError {
    Config(String),
    Solver(TtsmError),
    NonConverged,
}

impl From<String> for CliError {
    fn from(msg: String) -> Self {
        CliError::Config(msg)
    }
}

impl From<TtsmError> for CliError {
    fn from(err: TtsmError) -> Self {
        CliError::Solver(err)
    }
}

fn parse_param_flags(flags: &[String]) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for flag in flags {
        let (key, value) = flag
            .split_once('=')
            .ok_or_else(|| format!("--param '{flag}' must be key=value"))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn resolve_config(command: &str, common: &CommonArgs) -> Result<RunConfig, String> {
    let mut config = RunConfig {
        command: command.to_string(),
        ..RunConfig::default()
    };
    if let Some(path) = &common.config {
        config::FileConfig::load(path)?.apply_to(&mut config);
    }
    if let Some(problem) = &common.problem {
        config.problem = problem.clone();
    }
    if !common.omegas.is_empty() {
        config.omegas = common.omegas.clone();
    }
    if !common.grid.is_empty() {
        config.grid = common.grid.clone();
    }
    if !common.params.is_empty() {
        let flags = parse_param_flags(&common.params)?;
        config.params.extend(flags);
    }
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    if let Some(tol) = common.tol {
        config.tol = tol;
    }
    if let Some(iters) = common.max_iters {
        config.max_newton_iters = iters;
    }
    if let Some(solver) = &common.linear_solver {
        config.linear_solver = solver.clone();
    }
    if common.no_homotopy {
        config.no_homotopy = true;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn writer_for(config: &RunConfig) -> Result<OutputWriter, String> {
    let config_json = serde_json::to_value(config).map_err(|e| e.to_string())?;
    OutputWriter::new(&config.out_dir, config.hash(), config_json)
}

/// Solves the configured problem on the configured grid with its standard
/// initialization (two-stage homotopy for Duffing unless disabled).
fn solve_problem(config: &RunConfig) -> Result<(SolveReport, Arc<dyn TorusProblem>), CliError> {
    let kind = config.problem_kind()?;
    let newton = config.newton_config()?;
    let omegas = config.evaluated_omegas()?;
    let grid = AngularGrid::new(&omegas, &config.grid)?;

    let (problem, report): (Arc<dyn TorusProblem>, SolveReport) = match kind {
        ProblemKind::Linear => {
            let problem = Arc::new(LinearOscillator::new(config.linear_params()?));
            let sys = ResidualSystem::new(problem.clone(), grid.clone())?;
            let report = newton_solve(&sys, &TorusField::zeros(grid, 1), &newton)?;
            (problem, report)
        }
        ProblemKind::Duffing => {
            let params = config.duffing_params()?;
            let problem = Arc::new(Duffing::new(params)?);
            let report = if config.no_homotopy {
                let sys = ResidualSystem::new(problem.clone(), grid.clone())?;
                newton_solve(&sys, &TorusField::zeros(grid, 2), &newton)?
            } else {
                homotopy_solve(
                    |overrides| {
                        Ok(Arc::new(Duffing::new(params.with_overrides(overrides)?)?)
                            as Arc<dyn TorusProblem>)
                    },
                    &duffing::standard_schedule(&params),
                    &grid,
                    &newton,
                )?
            };
            (problem, report)
        }
        ProblemKind::Kg => {
            // zero start is the standard initialization at the default
            // operating point; unpreconditioned GMRES stagnates on this
            // operator, so Auto is promoted to the dense direct path
            let params = config.kg_params()?;
            let problem = Arc::new(KleinGordon::new(params)?);
            let mut newton = newton.clone();
            if newton.linear_solver == ttsm::solver::LinearSolver::Auto {
                newton.linear_solver = ttsm::solver::LinearSolver::DenseDirect;
            }
            let sys = ResidualSystem::new(problem.clone(), grid.clone())?;
            let report = newton_solve(&sys, &TorusField::zeros(grid, problem.state_dim()), &newton)?;
            (problem, report)
        }
        ProblemKind::ThreeTone => {
            let problem = Arc::new(ThreeToneLinear::new(config.three_tone_omegas()?));
            let sys = ResidualSystem::new(problem.clone(), grid.clone())?;
            let report = newton_solve(&sys, &TorusField::zeros(grid, 1), &newton)?;
            (problem, report)
        }
    };
    Ok((report, problem))
}

fn study_for(config: &RunConfig) -> Result<Box<dyn StudyProblem>, CliError> {
    Ok(match config.problem_kind()? {
        ProblemKind::Linear => Box::new(LinearOscillatorStudy {
            params: config.linear_params()?,
        }),
        ProblemKind::Duffing => Box::new(DuffingStudy {
            params: config.duffing_params()?,
        }),
        ProblemKind::Kg => Box::new(KleinGordonStudy {
            params: config.kg_params()?,
        }),
        ProblemKind::ThreeTone => {
            return Err(CliError::Config(
                "converge is not defined for three_tone (its solution is exact on any grid)"
                    .into(),
            ))
        }
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve {
            common,
            tmax,
            samples,
        } => {
            let mut config = resolve_config("solve", &common)?;
            if tmax.is_some() {
                config.tmax = tmax;
            }
            if samples.is_some() {
                config.samples = samples;
            }
            config.resolve_defaults()?;
            cmd_solve(&config)
        }
        Command::Converge {
            common,
            grids,
            reference,
            jobs,
        } => {
            let mut config = resolve_config("converge", &common)?;
            if !grids.is_empty() {
                config.grids = grids;
            }
            if let Some(r) = reference {
                config.reference_grid = r;
            }
            if let Some(j) = jobs {
                config.jobs = j;
            }
            config.resolve_defaults()?;
            cmd_converge(&config)
        }
        Command::Sfhb {
            common,
            omega0,
            omegaf,
            max_denominator,
            points,
        } => {
            let mut config = resolve_config("sfhb", &common)?;
            config.omega0 = Some(omega0);
            config.omegaf = Some(omegaf);
            if let Some(m) = max_denominator {
                config.max_denominator = m;
            }
            if points.is_some() {
                config.points = points;
            }
            cmd_sfhb(&config)
        }
        Command::Compare {
            common,
            tspan,
            cut,
            steps,
        } => {
            let mut config = resolve_config("compare", &common)?;
            if tspan.len() == 2 {
                config.window = Some((tspan[0], tspan[1]));
            }
            if cut.is_some() {
                config.cut = cut;
            }
            if steps.is_some() {
                config.steps = steps;
            }
            config.resolve_defaults()?;
            cmd_compare(&config)
        }
        Command::Spectrum {
            common,
            window,
            component,
        } => {
            let mut config = resolve_config("spectrum", &common)?;
            if window.len() == 2 {
                config.window = Some((window[0], window[1]));
            }
            if component.is_some() {
                config.component = component;
            }
            config.resolve_defaults()?;
            cmd_spectrum(&config)
        }
    }
}

fn cmd_solve(config: &RunConfig) -> Result<(), CliError> {
    let writer = writer_for(config)?;
    let kind = config.problem_kind()?;
    let (report, _problem) = match solve_problem(config) {
        Ok(ok) => ok,
        Err(CliError::Solver(err @ TtsmError::HomotopyStageFailed { .. })) => {
            writer.write_json(
                "report.json",
                "report",
                &json!({ "converged": false, "error": err.to_string() }),
            )?;
            eprintln!("error: {err}");
            return Err(CliError::NonConverged);
        }
        Err(other) => return Err(other),
    };

    writer.write_field("field.csv", &report.solution)?;
    writer.write_json("report.json", "report", &report)?;

    let (default_tmax, default_samples) = kind.default_span();
    let tmax = config.tmax.unwrap_or(default_tmax);
    let samples = config.samples.unwrap_or(default_samples).max(2);
    let times: Vec<f64> = (0..samples)
        .map(|i| tmax * i as f64 / (samples - 1) as f64)
        .collect();
    let series = torus_to_time(&report.solution, &times);
    writer.write_series("series.csv", &series)?;

    if report.converged {
        println!(
            "converged in {} Newton iterations, final residual {:.3e}",
            report.newton_iterations, report.final_residual_norm
        );
        Ok(())
    } else {
        eprintln!(
            "did not converge: residual {:.3e}{}",
            report.final_residual_norm,
            report
                .stall_reason
                .as_deref()
                .map(|r| format!(" ({r})"))
                .unwrap_or_default()
        );
        Err(CliError::NonConverged)
    }
}

fn cmd_converge(config: &RunConfig) -> Result<(), CliError> {
    let writer = writer_for(config)?;
    let study = study_for(config)?;
    let newton = config.newton_config()?;
    let table = convergence_sweep(
        study.as_ref(),
        &config.grids,
        config.reference_grid,
        &newton,
        config.jobs,
    )?;
    writer.write_convergence("convergence.csv", &table)?;
    writer.write_json("convergence.json", "convergence", &table)?;
    match (table.exact, table.fitted_rate) {
        (true, _) => println!("all errors at the exactness floor; rate fit skipped (exact)"),
        (false, Some(rate)) => println!("fitted exponential decay rate: {rate:.3} per grid point"),
        (false, None) => println!("no rate fit available"),
    }
    Ok(())
}

fn cmd_sfhb(config: &RunConfig) -> Result<(), CliError> {
    let writer = writer_for(config)?;
    let omega0_src = config
        .omega0
        .as_deref()
        .ok_or_else(|| "missing --omega0".to_string())?;
    let omegaf_src = config
        .omegaf
        .as_deref()
        .ok_or_else(|| "missing --omegaf".to_string())?;
    let omega0 = ttsm::expr::eval(omega0_src).map_err(|e| e.to_string())?;
    let omegaf = ttsm::expr::eval(omegaf_src).map_err(|e| e.to_string())?;
    let newton = config.newton_config()?;

    let plan = sfhb_plan(omega0, omegaf, config.max_denominator)?;
    let points = config.points.unwrap_or(plan.dofs as usize);
    let surrogate = sfhb_surrogate_solve(&plan, points, &newton)?;

    // the torus solve resolves both tones on a 3x3 grid regardless of the
    // frequency ratio
    let grid = AngularGrid::new(&[omega0, omegaf], &[3, 3])?;
    let problem = Arc::new(LinearOscillator::new(
        ttsm::problems::LinearOscillatorParams::new(omega0, omegaf),
    ));
    let sys = ResidualSystem::new(problem.clone(), grid.clone())?;
    let report = newton_solve(&sys, &TorusField::zeros(grid, 1), &newton)?;
    let ttsm_dofs = 9u64;
    let mut ttsm_error = 0.0f64;
    for (i, &t) in surrogate.series.times().iter().enumerate() {
        let _ = i;
        let v = torus_to_time(&report.solution, &[t]).states()[[0, 0]];
        ttsm_error = ttsm_error.max((v - problem.analytic_time(t)).abs());
    }

    writer.write_series("surrogate.csv", &surrogate.series)?;
    writer.write_json(
        "sfhb.json",
        "sfhb",
        &json!({
            "plan": plan,
            "points": points,
            "surrogate_deviation_from_surrogate_analytic": surrogate.deviation_from_surrogate,
            "surrogate_deviation_from_true_analytic": surrogate.deviation_from_true,
            "ttsm_grid": [3, 3],
            "ttsm_dofs": ttsm_dofs,
            "dof_ratio": plan.dof_ratio(ttsm_dofs),
            "ttsm_max_error_vs_analytic": ttsm_error,
        }),
    )?;
    println!(
        "base frequency {} with n1={} n2={}: {} DOFs vs {} torus DOFs ({}x)",
        plan.omega_base,
        plan.n1,
        plan.n2,
        plan.dofs,
        ttsm_dofs,
        plan.dof_ratio(ttsm_dofs)
    );
    Ok(())
}

fn cmd_compare(config: &RunConfig) -> Result<(), CliError> {
    let writer = writer_for(config)?;
    let kind = config.problem_kind()?;
    let (default_span, default_steps, default_cut) = kind.default_compare();
    let t_span = config.window.unwrap_or(default_span);
    let steps = config.steps.unwrap_or(default_steps);
    let cut = config.cut.unwrap_or(default_cut);

    let (report, problem) = solve_problem(config)?;
    if !report.converged {
        return Err(CliError::NonConverged);
    }
    let probes: Vec<usize> = match kind {
        ProblemKind::Kg => {
            let kg = KleinGordon::new(config.kg_params()?)?;
            kg.default_probe_components()
        }
        _ => vec![0],
    };
    let comparison =
        attractor_comparison(problem, &report.solution, t_span, steps, cut, &probes, 8192)?;
    writer.write_json("compare.json", "compare", &comparison)?;
    println!(
        "post-transient deviation {:.3e} (pre-transient {:.3e}); {} probe(s)",
        comparison.max_post_transient_deviation,
        comparison.max_pre_transient_deviation,
        comparison.probes.len()
    );
    for probe in &comparison.probes {
        println!(
            "  component {}: matched peaks at {:?}",
            probe.component,
            probe
                .matched_peaks
                .iter()
                .map(|f| format!("{f:.4}"))
                .collect::<Vec<_>>()
        );
    }
    Ok(())
}

fn cmd_spectrum(config: &RunConfig) -> Result<(), CliError> {
    let writer = writer_for(config)?;
    let kind = config.problem_kind()?;
    let window = config
        .window
        .ok_or_else(|| "spectrum requires --window START END".to_string())?;
    if !(window.1 > window.0) {
        return Err(CliError::Config("window end must exceed start".into()));
    }
    let component = config.component.unwrap_or(0);

    let (report, _problem) = solve_problem(config)?;
    if !report.converged {
        return Err(CliError::NonConverged);
    }
    let samples = config.samples.unwrap_or(kind.default_span().1).max(16);
    let times: Vec<f64> = (0..samples)
        .map(|i| window.1 * i as f64 / (samples - 1) as f64)
        .collect();
    let series = torus_to_time(&report.solution, &times);
    let spectrum = compute_spectrum(&series, component, window)?;
    let peaks = spectrum.peaks(DEFAULT_PEAK_THRESHOLD);

    writer.write_spectrum("spectrum.csv", &spectrum)?;
    writer.write_json(
        "peaks.json",
        "peaks",
        &json!({
            "component": component,
            "window": window,
            "resolution": spectrum.resolution(),
            "peaks": peaks,
        }),
    )?;
    println!(
        "{} peaks above {}% threshold; resolution {:.4}",
        peaks.len(),
        DEFAULT_PEAK_THRESHOLD * 100.0,
        spectrum.resolution()
    );
    Ok(())
}
