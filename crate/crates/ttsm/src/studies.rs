//! Verification studies: grid-refinement sweeps with exponential-rate fits,
//! the supplemental-frequency harmonic-balance (SF-HB) degrees-of-freedom
//! comparison with its rational-surrogate solve, and attractor/transient
//! comparisons against time-accurate integration.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::error::TtsmError;
use crate::field::TorusField;
use crate::grid::AngularGrid;
use crate::problem::{Anchor, TorusProblem};
use crate::problems::{
    duffing, Duffing, DuffingParams, KleinGordon, KleinGordonParams, LinearOscillator,
    LinearOscillatorParams,
};
use crate::reference::{
    compute_spectrum, field_error_norm, rk4_integrate, time_rhs, torus_to_time, Spectrum,
    TimeSeries,
};
use crate::solver::{homotopy_solve, newton_solve, LinearSolver, NewtonConfig, SolveReport};
use crate::spectral::dft_coefficients;

/// Default relative threshold for peak extraction: 1% of the maximum amplitude.
pub const DEFAULT_PEAK_THRESHOLD: f64 = 0.01;

/// Errors below this are treated as exactly representable solutions and
/// excluded from rate fitting.
pub const EXACTNESS_FLOOR: f64 = 1e-11;

/// A problem family that knows its own standard initialization, so sweeps can
/// solve any grid reproducibly.
pub trait StudyProblem: Send + Sync {
    fn label(&self) -> &str;

    fn frequencies(&self) -> Vec<f64>;

    /// Solves on an equal-count grid from the problem's standard
    /// initialization (zero start, or the problem's homotopy schedule).
    fn solve(&self, counts: &[usize], config: &NewtonConfig) -> Result<SolveReport, TtsmError>;

    /// Solves the reference grid, optionally warm-started from a coarser
    /// solution. The torus is the same attractor either way; the warm start
    /// only shortens the Newton path.
    fn solve_reference(
        &self,
        counts: &[usize],
        config: &NewtonConfig,
        warm: Option<&TorusField>,
    ) -> Result<SolveReport, TtsmError> {
        let _ = warm;
        self.solve(counts, config)
    }
}

/// Sweep driver for the forced linear oscillator.
pub struct LinearOscillatorStudy {
    pub params: LinearOscillatorParams,
}

impl StudyProblem for LinearOscillatorStudy {
    fn label(&self) -> &str {
        "linear"
    }

    fn frequencies(&self) -> Vec<f64> {
        self.params.frequencies()
    }

    fn solve(&self, counts: &[usize], config: &NewtonConfig) -> Result<SolveReport, TtsmError> {
        let problem = Arc::new(LinearOscillator::new(self.params));
        let grid = AngularGrid::new(&self.frequencies(), counts)?;
        let sys = crate::collocation::ResidualSystem::new(problem, grid.clone())?;
        newton_solve(&sys, &TorusField::zeros(grid, 1), config)
    }
}

/// Sweep driver for the Duffing oscillator; the standard initialization is
/// the two-stage homotopy from the weak operating point.
pub struct DuffingStudy {
    pub params: DuffingParams,
}

impl StudyProblem for DuffingStudy {
    fn label(&self) -> &str {
        "duffing"
    }

    fn frequencies(&self) -> Vec<f64> {
        self.params.frequencies()
    }

    fn solve(&self, counts: &[usize], config: &NewtonConfig) -> Result<SolveReport, TtsmError> {
        let grid = AngularGrid::new(&self.frequencies(), counts)?;
        let base = self.params;
        let schedule = duffing::standard_schedule(&base);
        homotopy_solve(
            |overrides| {
                Ok(Arc::new(Duffing::new(base.with_overrides(overrides)?)?)
                    as Arc<dyn TorusProblem>)
            },
            &schedule,
            &grid,
            config,
        )
    }
}

/// Sweep driver for the Klein-Gordon problem; the standard initialization is
/// a zero start, which converges at the default operating point on every
/// desk-scale grid.
pub struct KleinGordonStudy {
    pub params: KleinGordonParams,
}

impl KleinGordonStudy {
    /// Unpreconditioned GMRES stagnates on this operator (its spectrum hugs
    /// the imaginary axis at distance γ/2), so Auto selection is promoted to
    /// the dense direct path for every grid in the sweep.
    fn effective_config(&self, config: &NewtonConfig) -> NewtonConfig {
        let mut config = config.clone();
        if config.linear_solver == LinearSolver::Auto {
            config.linear_solver = LinearSolver::DenseDirect;
        }
        config
    }
}

impl StudyProblem for KleinGordonStudy {
    fn label(&self) -> &str {
        "kg"
    }

    fn frequencies(&self) -> Vec<f64> {
        self.params.frequencies()
    }

    fn solve(&self, counts: &[usize], config: &NewtonConfig) -> Result<SolveReport, TtsmError> {
        let grid = AngularGrid::new(&self.frequencies(), counts)?;
        let problem = Arc::new(KleinGordon::new(self.params)?);
        let n = problem.state_dim();
        let sys = crate::collocation::ResidualSystem::new(problem, grid.clone())?;
        let config = self.effective_config(config);
        newton_solve(&sys, &TorusField::zeros(grid, n), &config)
    }

    fn solve_reference(
        &self,
        counts: &[usize],
        config: &NewtonConfig,
        warm: Option<&TorusField>,
    ) -> Result<SolveReport, TtsmError> {
        let Some(warm) = warm else {
            return self.solve(counts, config);
        };
        let grid = AngularGrid::new(&self.frequencies(), counts)?;
        let problem = Arc::new(KleinGordon::new(self.params)?);
        let sys = crate::collocation::ResidualSystem::new(problem, grid.clone())?;
        let guess = dft_coefficients(warm).sample_on(&grid);
        let config = self.effective_config(config);
        let report = newton_solve(&sys, &guess, &config)?;
        if report.converged {
            Ok(report)
        } else {
            self.solve(counts, &config)
        }
    }
}

/// Per-grid errors against a fine-grid reference, with the exponential decay
/// rate fitted to the two finest grids (and a wider-window fit alongside).
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub problem: String,
    pub reference_grid: usize,
    pub grid_sizes: Vec<usize>,
    pub errors: Vec<f64>,
    /// Per-grid-point exponential decay rate from the two finest grids;
    /// `None` when the solution is exactly representable.
    pub fitted_rate: Option<f64>,
    pub fit_window: Option<(usize, usize)>,
    /// Least-squares fit over all grids with errors above the solver floor.
    pub wide_fit_rate: Option<f64>,
    /// All errors at or below [`EXACTNESS_FLOOR`]; rate fitting skipped.
    pub exact: bool,
}

impl ConvergenceTable {
    /// Indices `i` where the error fails to decrease from grid `i` to `i+1`.
    pub fn monotone_violations(&self) -> Vec<usize> {
        (0..self.errors.len().saturating_sub(1))
            .filter(|&i| self.errors[i + 1] > self.errors[i])
            .collect()
    }
}

/// Runs the refinement sweep: solves every grid in `grids` (equal counts on
/// each axis), solves `reference_grid` warm-started from the finest sweep
/// solution, and tabulates `‖q̂ − v̂‖_∞` per grid.
pub fn convergence_sweep(
    problem: &dyn StudyProblem,
    grids: &[usize],
    reference_grid: usize,
    config: &NewtonConfig,
    jobs: usize,
) -> Result<ConvergenceTable, TtsmError> {
    convergence_sweep_with_reference(problem, grids, reference_grid, config, jobs)
        .map(|(table, _)| table)
}

/// [`convergence_sweep`] that also hands back the converged reference field,
/// for follow-up diagnostics that need it (truncation probes, spectra).
pub fn convergence_sweep_with_reference(
    problem: &dyn StudyProblem,
    grids: &[usize],
    reference_grid: usize,
    config: &NewtonConfig,
    jobs: usize,
) -> Result<(ConvergenceTable, TorusField), TtsmError> {
    if grids.is_empty() {
        return Err(TtsmError::InvalidConfig("sweep needs grids".into()));
    }
    if grids.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TtsmError::InvalidConfig(
            "sweep grids must be strictly increasing".into(),
        ));
    }
    let &finest = grids.last().unwrap();
    if reference_grid <= finest {
        return Err(TtsmError::InvalidConfig(format!(
            "reference grid {reference_grid} must exceed the finest sweep grid {finest}"
        )));
    }
    let k = problem.frequencies().len();

    let jobs = jobs.max(1).min(grids.len());
    let solutions: Mutex<Vec<Option<TorusField>>> = Mutex::new(vec![None; grids.len()]);
    let failure: Mutex<Option<TtsmError>> = Mutex::new(None);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= grids.len() || failure.lock().unwrap().is_some() {
                    return;
                }
                let counts = vec![grids[i]; k];
                match problem.solve(&counts, config) {
                    Ok(report) if report.converged => {
                        solutions.lock().unwrap()[i] = Some(report.solution);
                    }
                    Ok(report) => {
                        failure
                            .lock()
                            .unwrap()
                            .get_or_insert(TtsmError::SweepGridFailed {
                                grid: grids[i],
                                residual: report.final_residual_norm,
                            });
                    }
                    Err(err) => {
                        failure.lock().unwrap().get_or_insert(err);
                    }
                }
            });
        }
    });
    if let Some(err) = failure.into_inner().unwrap() {
        return Err(err);
    }
    let solutions: Vec<TorusField> = solutions
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|s| s.expect("all grids solved"))
        .collect();

    let ref_counts = vec![reference_grid; k];
    let ref_report = problem.solve_reference(&ref_counts, config, solutions.last())?;
    if !ref_report.converged {
        return Err(TtsmError::SweepGridFailed {
            grid: reference_grid,
            residual: ref_report.final_residual_norm,
        });
    }
    let reference = ref_report.solution;

    let mut errors = Vec::with_capacity(grids.len());
    for solution in &solutions {
        errors.push(field_error_norm(solution, &reference)?);
    }

    let exact = errors.iter().all(|&e| e <= EXACTNESS_FLOOR);
    let (fitted_rate, fit_window) = if exact || grids.len() < 2 {
        (None, None)
    } else {
        let n = grids.len();
        let (ga, gb) = (grids[n - 2], grids[n - 1]);
        let (ea, eb) = (errors[n - 2], errors[n - 1]);
        let rate = (ea.ln() - eb.ln()) / (gb - ga) as f64;
        (Some(rate), Some((ga, gb)))
    };
    let wide_fit_rate = fit_rate_least_squares(grids, &errors, 1e-9);

    Ok((
        ConvergenceTable {
            problem: problem.label().to_string(),
            reference_grid,
            grid_sizes: grids.to_vec(),
            errors,
            fitted_rate,
            fit_window,
            wide_fit_rate,
            exact,
        },
        reference,
    ))
}

/// Least-squares slope of `ln e` against grid size over errors above `floor`,
/// returned as a positive decay rate.
fn fit_rate_least_squares(grids: &[usize], errors: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = grids
        .iter()
        .zip(errors)
        .filter(|(_, &e)| e > floor)
        .map(|(&g, &e)| (g as f64, e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    Some(-(n * sxy - sx * sy) / denom)
}

/// The supplemental-frequency harmonic-balance plan for a two-tone problem:
/// a base frequency with `ω₀ = n₁·ω_base` exactly and `ω_f ≈ n₂·ω_base`,
/// found by continued-fraction approximation of `ω_f/ω₀`.
#[derive(Debug, Clone, Serialize)]
pub struct SfhbPlan {
    pub omega0: f64,
    pub omega_f: f64,
    pub n1: u64,
    pub n2: u64,
    pub omega_base: f64,
    pub n_h: u64,
    /// `2·n_h + 1` harmonic-balance degrees of freedom.
    pub dofs: u64,
    /// `2π/ω_base`, the artificial common period of the surrogate.
    pub pseudo_period: f64,
    /// `|ω_f − n₂·ω_base|`.
    pub approximation_error: f64,
}

impl SfhbPlan {
    /// DOF ratio against a torus grid with the given total node count.
    pub fn dof_ratio(&self, ttsm_dofs: u64) -> f64 {
        self.dofs as f64 / ttsm_dofs as f64
    }
}

/// Picks the best rational approximation `n₂/n₁ ≈ ω_f/ω₀` with
/// `n₁ ≤ max_denominator` via continued-fraction convergents.
pub fn sfhb_plan(omega0: f64, omega_f: f64, max_denominator: u64) -> Result<SfhbPlan, TtsmError> {
    if !(omega0 > 0.0) || !(omega_f > 0.0) {
        return Err(TtsmError::InvalidConfig(
            "sfhb frequencies must be positive".into(),
        ));
    }
    if max_denominator == 0 {
        return Err(TtsmError::InvalidConfig(
            "max_denominator must be >= 1".into(),
        ));
    }
    let ratio = omega_f / omega0;

    // continued-fraction convergents h/k of the ratio
    let (mut h_prev, mut k_prev) = (0u64, 1u64);
    let (mut h_cur, mut k_cur) = (1u64, 0u64);
    let mut x = ratio;
    let mut best: Option<(u64, u64)> = None;
    for _ in 0..64 {
        let a = x.floor();
        if a < 0.0 || a > u64::MAX as f64 / 2.0 {
            break;
        }
        let a_int = a as u64;
        let h_next = a_int
            .saturating_mul(h_cur)
            .saturating_add(h_prev);
        let k_next = a_int
            .saturating_mul(k_cur)
            .saturating_add(k_prev);
        if k_next > max_denominator {
            break;
        }
        (h_prev, k_prev) = (h_cur, k_cur);
        (h_cur, k_cur) = (h_next, k_next);
        if h_cur >= 1 {
            best = Some((h_cur, k_cur));
        }
        let frac = x - a;
        if frac.abs() < 1e-12 {
            break;
        }
        x = 1.0 / frac;
    }
    let (n2, n1) = best.ok_or_else(|| {
        TtsmError::InvalidConfig(format!(
            "no rational approximation of {ratio} with denominator <= {max_denominator}"
        ))
    })?;

    let omega_base = omega0 / n1 as f64;
    let n_h = n1.max(n2);
    Ok(SfhbPlan {
        omega0,
        omega_f,
        n1,
        n2,
        omega_base,
        n_h,
        dofs: 2 * n_h + 1,
        pseudo_period: 2.0 * std::f64::consts::PI / omega_base,
        approximation_error: (omega_f - n2 as f64 * omega_base).abs(),
    })
}

/// The surrogate forcing `sin(n₁θ) + cos(n₂θ)` on a single angle: the linear
/// oscillator with its two tones moved onto exact harmonics of the base
/// frequency.
struct SurrogateTone {
    n1: f64,
    n2: f64,
}

impl TorusProblem for SurrogateTone {
    fn label(&self) -> &str {
        "sfhb-surrogate"
    }
    fn state_dim(&self) -> usize {
        1
    }
    fn rhs(&self, _state: &[f64], phases: &[f64], out: &mut [f64]) {
        out[0] = (self.n1 * phases[0]).sin() + (self.n2 * phases[0]).cos();
    }
    fn rhs_jacobian(&self, _state: &[f64], _phases: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn anchor(&self) -> Option<Anchor> {
        Some(Anchor::component(vec![0], 0, 0.0))
    }
}

/// Result of the single-frequency surrogate solve.
#[derive(Debug, Clone, Serialize)]
pub struct SfhbSurrogate {
    pub plan: SfhbPlan,
    /// Reconstruction over one pseudo-period.
    pub series: TimeSeries,
    /// Max deviation from the surrogate's own analytic solution (tones at
    /// exactly `n₁ω_base`, `n₂ω_base`); machine-scale when `n_points` resolves
    /// both harmonics.
    pub deviation_from_surrogate: f64,
    /// Max deviation from the true incommensurate-frequency analytic
    /// solution: the rational-surrogate error.
    pub deviation_from_true: f64,
}

/// Solves the surrogate as a single-frequency collocation system with
/// `n_points` nodes over the pseudo-period and reports its deviation from
/// both analytic solutions.
pub fn sfhb_surrogate_solve(
    plan: &SfhbPlan,
    n_points: usize,
    config: &NewtonConfig,
) -> Result<SfhbSurrogate, TtsmError> {
    if (n_points as u64) < plan.dofs {
        return Err(TtsmError::InvalidConfig(format!(
            "n_points = {n_points} cannot resolve the surrogate harmonics; need >= {}",
            plan.dofs
        )));
    }
    let grid = AngularGrid::new(&[plan.omega_base], &[n_points])?;
    let problem = Arc::new(SurrogateTone {
        n1: plan.n1 as f64,
        n2: plan.n2 as f64,
    });
    let sys = crate::collocation::ResidualSystem::new(problem, grid.clone())?;
    let report = newton_solve(&sys, &TorusField::zeros(grid, 1), config)?;
    if !report.converged {
        return Err(TtsmError::SweepGridFailed {
            grid: n_points,
            residual: report.final_residual_norm,
        });
    }

    let samples = 4096;
    let times: Vec<f64> = (0..=samples)
        .map(|i| plan.pseudo_period * i as f64 / samples as f64)
        .collect();
    let series = torus_to_time(&report.solution, &times);

    let w0 = plan.omega0;
    let wf = plan.omega_f;
    let ws1 = plan.n1 as f64 * plan.omega_base;
    let ws2 = plan.n2 as f64 * plan.omega_base;
    let surrogate = |t: f64| (1.0 - (ws1 * t).cos()) / ws1 + (ws2 * t).sin() / ws2;
    let truth = |t: f64| (1.0 - (w0 * t).cos()) / w0 + (wf * t).sin() / wf;

    let mut dev_surrogate = 0.0f64;
    let mut dev_true = 0.0f64;
    for (i, &t) in series.times().iter().enumerate() {
        let v = series.states()[[i, 0]];
        dev_surrogate = dev_surrogate.max((v - surrogate(t)).abs());
        dev_true = dev_true.max((v - truth(t)).abs());
    }

    Ok(SfhbSurrogate {
        plan: plan.clone(),
        series,
        deviation_from_surrogate: dev_surrogate,
        deviation_from_true: dev_true,
    })
}

/// Spectra and matched peaks for one probed state component.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeComparison {
    pub component: usize,
    pub max_post_transient_deviation: f64,
    pub torus_peaks: Vec<(f64, f64)>,
    pub reference_peaks: Vec<(f64, f64)>,
    /// Torus peak frequencies with a reference peak within one bin.
    pub matched_peaks: Vec<f64>,
    #[serde(skip_serializing)]
    pub torus_spectrum: Spectrum,
    #[serde(skip_serializing)]
    pub reference_spectrum: Spectrum,
}

/// Deviation between the torus reconstruction and a time-accurate
/// integration from the problem's initial condition, split at the transient
/// cut, plus per-probe spectra.
#[derive(Debug, Clone, Serialize)]
pub struct AttractorComparison {
    pub transient_cut: f64,
    /// Max deviation over all components for `t >= cut`.
    pub max_post_transient_deviation: f64,
    /// Max deviation over all components for `t < cut`.
    pub max_pre_transient_deviation: f64,
    /// Spectral bin width of the post-transient window.
    pub frequency_resolution: f64,
    pub probes: Vec<ProbeComparison>,
}

/// Integrates the problem from its stated initial condition over `t_span`
/// with `num_steps` RK4 steps, compares against the torus reconstruction on
/// `t >= transient_cut`, and matches spectral peaks per probed component.
///
/// Both series are decimated to at most `max_samples` points before the
/// deviation and spectra are computed.
pub fn attractor_comparison(
    problem: Arc<dyn TorusProblem>,
    field: &TorusField,
    t_span: (f64, f64),
    num_steps: usize,
    transient_cut: f64,
    probes: &[usize],
    max_samples: usize,
) -> Result<AttractorComparison, TtsmError> {
    let freqs = field.grid().frequencies().to_vec();
    let q0 = problem.initial_state();
    let reference = rk4_integrate(time_rhs(problem.as_ref(), &freqs), &q0, t_span, num_steps)?;
    let stride = reference.len().div_ceil(max_samples.max(16));
    let reference = reference.decimate(stride);
    let torus = torus_to_time(field, reference.times());

    let all: Vec<usize> = (0..field.state_dim()).collect();
    let post = torus.max_deviation(&reference, transient_cut, &all);
    let pre_span: Vec<f64> = reference
        .times()
        .iter()
        .copied()
        .filter(|&t| t < transient_cut)
        .collect();
    let pre = if pre_span.is_empty() {
        0.0
    } else {
        let mut worst = 0.0f64;
        for (i, &t) in reference.times().iter().enumerate() {
            if t >= transient_cut {
                continue;
            }
            for c in 0..field.state_dim() {
                worst = worst.max((torus.states()[[i, c]] - reference.states()[[i, c]]).abs());
            }
        }
        worst
    };

    let window = (transient_cut, t_span.1);
    let mut probe_reports = Vec::with_capacity(probes.len());
    let mut resolution = 0.0;
    for &component in probes {
        let torus_spectrum = compute_spectrum(&torus, component, window)?;
        let reference_spectrum = compute_spectrum(&reference, component, window)?;
        resolution = torus_spectrum.resolution();
        let torus_peaks = torus_spectrum.peaks(DEFAULT_PEAK_THRESHOLD);
        let reference_peaks = reference_spectrum.peaks(DEFAULT_PEAK_THRESHOLD);
        let matched_peaks = torus_peaks
            .iter()
            .filter(|(f, _)| {
                reference_peaks
                    .iter()
                    .any(|(g, _)| (f - g).abs() <= resolution)
            })
            .map(|&(f, _)| f)
            .collect();
        probe_reports.push(ProbeComparison {
            component,
            max_post_transient_deviation: torus.max_deviation(
                &reference,
                transient_cut,
                &[component],
            ),
            torus_peaks,
            reference_peaks,
            matched_peaks,
            torus_spectrum,
            reference_spectrum,
        });
    }

    Ok(AttractorComparison {
        transient_cut,
        max_post_transient_deviation: post,
        max_pre_transient_deviation: pre,
        frequency_resolution: resolution,
        probes: probe_reports,
    })
}
