//! Acceptance suite: one pass/fail line per criterion, executed in order in
//! a single test so timings are not distorted by parallel test scheduling.
//!
//! Run with `cargo test -p ttsm --test acceptance -- --nocapture` to see the
//! per-criterion lines.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ttsm::collocation::{truncation_error_probe, ResidualSystem};
use ttsm::problems::{
    Duffing, DuffingParams, KleinGordon, KleinGordonParams, LinearOscillator,
    LinearOscillatorParams, ThreeToneLinear,
};
use ttsm::reference::{field_error_norm, rk4_order_ratio, time_rhs, torus_to_time};
use ttsm::solver::{newton_solve, NewtonConfig, SolveReport};
use ttsm::studies::{
    attractor_comparison, convergence_sweep, convergence_sweep_with_reference, sfhb_plan,
    DuffingStudy, KleinGordonStudy, StudyProblem,
};
use ttsm::{AngularGrid, TorusField, TorusProblem};

struct Harness {
    failures: Vec<String>,
    reports: Vec<(String, SolveReport)>,
}

impl Harness {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
            reports: Vec::new(),
        }
    }

    fn check(&mut self, criterion: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("acceptance {criterion}: {verdict} ({detail})");
        if !pass {
            self.failures.push(format!("{criterion}: {detail}"));
        }
    }

    fn keep(&mut self, label: &str, report: SolveReport) -> TorusField {
        let field = report.solution.clone();
        self.reports.push((label.to_string(), report));
        field
    }
}

fn inf_node_error(field: &TorusField, exact: &TorusField) -> f64 {
    field.max_abs_diff(exact).unwrap()
}

/// Criterion 1: the linear oscillator on a 3x3 anchored grid reproduces the
/// analytic solution at the nodes and at 1000 random times, for all three
/// frequency regimes, each within a second.
fn criterion_1(h: &mut Harness) {
    let cases = [
        ("standard (1, sqrt2)", LinearOscillatorParams::default()),
        (
            "large-ratio (1, 2pi/100)",
            LinearOscillatorParams::large_ratio_pair(false),
        ),
        (
            "large-ratio swapped (2pi/100, 1)",
            LinearOscillatorParams::large_ratio_pair(true),
        ),
        ("beat (1, 0.97+0.03sqrt2)", LinearOscillatorParams::beat_pair()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (name, params) in cases {
        let start = Instant::now();
        let problem = Arc::new(LinearOscillator::new(params));
        let grid = AngularGrid::new(&params.frequencies(), &[3, 3]).unwrap();
        let sys = ResidualSystem::new(problem.clone(), grid.clone()).unwrap();
        let report = newton_solve(
            &sys,
            &TorusField::zeros(grid.clone(), 1),
            &NewtonConfig::default(),
        )
        .unwrap();
        let node_err = inf_node_error(&report.solution, &problem.analytic_field(&grid));
        let series_coeffs = ttsm::spectral::dft_coefficients(&report.solution);
        let mut time_err = 0.0f64;
        for _ in 0..1000 {
            let t = rng.gen_range(0.0..200.0 * PI);
            let phases = [
                (params.omega0 * t).rem_euclid(2.0 * PI),
                (params.omegaf * t).rem_euclid(2.0 * PI),
            ];
            let mut out = [0.0];
            series_coeffs.evaluate(&phases, &mut out);
            time_err = time_err.max((out[0] - problem.analytic_time(t)).abs());
        }
        let elapsed = start.elapsed().as_secs_f64();
        let pass =
            report.converged && node_err < 1e-11 && time_err < 1e-11 && elapsed < 1.0;
        h.check(
            "criterion 1 (linear exactness)",
            pass,
            format!(
                "{name}: node err {node_err:.2e}, 1000-time err {time_err:.2e}, {elapsed:.2}s"
            ),
        );
        h.keep(&format!("linear {name}"), report);
    }
}

/// Criterion 2: Duffing 3x3 via homotopy against the 31x31 reference lands in
/// the factor-2 band around 1.6e-2, within 30 seconds.
fn criterion_2(h: &mut Harness) -> (TorusField, TorusField) {
    let start = Instant::now();
    let study = DuffingStudy {
        params: DuffingParams::default(),
    };
    let config = NewtonConfig::default();
    let coarse_report = study.solve(&[3, 3], &config).unwrap();
    let reference_report = study.solve(&[31, 31], &config).unwrap();
    let coarse = h.keep("duffing 3x3", coarse_report);
    let reference = h.keep("duffing 31x31", reference_report);
    let err = field_error_norm(&coarse, &reference).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = (0.8e-2..=3.2e-2).contains(&err) && elapsed < 30.0;
    h.check(
        "criterion 2 (duffing solution error)",
        pass,
        format!("error {err:.4e} in [0.8e-2, 3.2e-2], {elapsed:.1}s < 30s"),
    );
    (coarse, reference)
}

fn monotone_ok(errors: &[f64], floor: f64) -> (bool, usize) {
    let violations: Vec<usize> = (0..errors.len() - 1)
        .filter(|&i| errors[i + 1] > errors[i])
        .collect();
    let near_floor = violations.iter().all(|&i| errors[i + 1] <= floor);
    (violations.len() <= 1 && near_floor, violations.len())
}

/// Least-squares decay rate over the last `window` grids; used to check that
/// the two-finest fit is stable under widening the fit window.
fn windowed_rate(grids: &[usize], errors: &[f64], window: usize) -> f64 {
    let n = grids.len();
    let pts: Vec<(f64, f64)> = (n - window..n)
        .map(|i| (grids[i] as f64, errors[i].ln()))
        .collect();
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    -(m * sxy - sx * sy) / (m * sxx - sx * sx)
}

/// Criterion 3: Duffing sweep {3,...,19} vs the 31x31 reference fits an
/// exponential decay rate in [0.6, 1.1] with monotone errors, within 5 min.
fn criterion_3(h: &mut Harness) {
    let start = Instant::now();
    let study = DuffingStudy {
        params: DuffingParams::default(),
    };
    let grids: Vec<usize> = (1..=9).map(|i| 2 * i + 1).collect();
    let table = convergence_sweep(&study, &grids, 31, &NewtonConfig::default(), 2).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let rate = table.fitted_rate.unwrap_or(f64::NAN);
    let (monotone, violations) = monotone_ok(&table.errors, 1e-8);
    let wider = windowed_rate(&table.grid_sizes, &table.errors, 3);
    let stable = (rate - wider).abs() < 0.15;
    let pass = (0.6..=1.1).contains(&rate) && monotone && stable && elapsed < 300.0;
    h.check(
        "criterion 3 (duffing convergence rate)",
        pass,
        format!(
            "rate {rate:.3} in [0.6, 1.1] (3-grid fit {wider:.3}), \
             {violations} monotonicity exceptions, {elapsed:.0}s < 300s"
        ),
    );
}

/// Criterion 4: Klein-Gordon sweep with nx = 8 fits a rate in [0.4, 0.75] and
/// the 5x5 solve converges to 1e-10 from the standard initialization, within
/// 10 minutes. The converged reference also feeds the truncation-probe
/// refinement check (5x5 probe below the 3x3 probe).
fn criterion_4(h: &mut Harness) -> TorusField {
    let start = Instant::now();
    let params = KleinGordonParams::default();
    let study = KleinGordonStudy { params };
    let config = NewtonConfig::default();
    let five = study.solve(&[5, 5], &config).unwrap();
    let five_ok = five.converged && five.final_residual_norm <= 1e-10;
    let field5 = h.keep("kg 5x5", five);

    let grids: Vec<usize> = (1..=9).map(|i| 2 * i + 1).collect();
    let (table, kg_reference) =
        convergence_sweep_with_reference(&study, &grids, 31, &config, 1).unwrap();

    let kg_problem: Arc<dyn TorusProblem> = Arc::new(KleinGordon::new(params).unwrap());
    let probe = |g: usize| {
        let coarse = AngularGrid::new(&params.frequencies(), &[g, g]).unwrap();
        truncation_error_probe(kg_problem.clone(), &coarse, &kg_reference).unwrap()
    };
    let (probe3, probe5) = (probe(3), probe(5));
    let probes_ok = probe5 > 0.0 && probe5 < probe3;
    h.check(
        "criterion 4a (kg truncation probes refine)",
        probes_ok,
        format!("probe(3x3) {probe3:.2e} -> probe(5x5) {probe5:.2e}"),
    );
    let elapsed = start.elapsed().as_secs_f64();
    let rate = table.fitted_rate.unwrap_or(f64::NAN);
    let (monotone, violations) = monotone_ok(&table.errors, 1e-8);
    let wider = windowed_rate(&table.grid_sizes, &table.errors, 3);
    let stable = (rate - wider).abs() < 0.15;
    let pass = five_ok && (0.4..=0.75).contains(&rate) && monotone && stable && elapsed < 600.0;
    h.check(
        "criterion 4 (klein-gordon convergence rate)",
        pass,
        format!(
            "rate {rate:.3} in [0.4, 0.75] (3-grid fit {wider:.3}), 5x5 converged = {five_ok}, \
             {violations} monotonicity exceptions, {elapsed:.0}s < 600s"
        ),
    );
    field5
}

/// Criterion 5: the SF-HB plan for the beat pair reproduces the published
/// resolution numbers exactly, and the torus solve needs 18x fewer unknowns.
fn criterion_5(h: &mut Harness) {
    let omega_f = 0.97 + 0.03 * 2f64.sqrt();
    let plan = sfhb_plan(1.0, omega_f, 100).unwrap();
    let integers_ok = plan.n1 == 80 && plan.n2 == 81 && plan.n_h == 81 && plan.dofs == 163;
    let reals_ok = (plan.omega_base - 0.0125).abs() < 1e-10
        && (502.0..=504.0).contains(&plan.pseudo_period);

    // beat-case torus solve at 9 DOFs reaches machine precision (criterion 1
    // covers the node/time errors; re-assert the node error here)
    let params = LinearOscillatorParams::beat_pair();
    let problem = Arc::new(LinearOscillator::new(params));
    let grid = AngularGrid::new(&params.frequencies(), &[3, 3]).unwrap();
    let sys = ResidualSystem::new(problem.clone(), grid.clone()).unwrap();
    let report = newton_solve(
        &sys,
        &TorusField::zeros(grid.clone(), 1),
        &NewtonConfig::default(),
    )
    .unwrap();
    let err = inf_node_error(&report.solution, &problem.analytic_field(&grid));
    let ratio = plan.dof_ratio(9);

    let pass = integers_ok && reals_ok && err < 1e-11;
    h.check(
        "criterion 5 (sfhb comparison)",
        pass,
        format!(
            "n1={} n2={} dofs={} omega_base={:.6} T={:.2}, torus 3x3 err {err:.2e}, {ratio:.1}x fewer DOFs",
            plan.n1, plan.n2, plan.dofs, plan.omega_base, plan.pseudo_period
        ),
    );
}

/// Criterion 6: the Duffing reconstruction over t in [55, 220] shows peaks at
/// both forcing tones plus a cubic combination tone above 1% amplitude, with
/// matching peak locations in the RK4 spectrum. The spectrum run uses a 5x5
/// grid so the combination tones are inside the resolved wave-number box; the
/// 3x3 solve is used for the attractor-deviation bound.
fn criterion_6(h: &mut Harness) {
    let params = DuffingParams::default();
    let study = DuffingStudy { params };
    let config = NewtonConfig::default();
    let problem: Arc<dyn TorusProblem> = Arc::new(Duffing::new(params).unwrap());

    // transient/attractor bound on the coarse 3x3 grid
    let coarse = study.solve(&[3, 3], &config).unwrap().solution;
    let cmp3 = attractor_comparison(
        problem.clone(),
        &coarse,
        (0.0, 220.0),
        15_000,
        55.0,
        &[0],
        16_000,
    )
    .unwrap();
    let dev_ok = cmp3.max_post_transient_deviation <= 3e-2
        && cmp3.max_pre_transient_deviation > 3.0 * cmp3.max_post_transient_deviation;
    h.check(
        "criterion 6a (duffing attractor deviation)",
        dev_ok,
        format!(
            "post-transient {:.3e} <= 3e-2, pre-transient {:.3e} visibly larger",
            cmp3.max_post_transient_deviation, cmp3.max_pre_transient_deviation
        ),
    );

    let fine = study.solve(&[5, 5], &config).unwrap().solution;
    let cmp5 = attractor_comparison(
        problem,
        &fine,
        (0.0, 220.0),
        15_000,
        55.0,
        &[0],
        16_000,
    )
    .unwrap();
    let probe = &cmp5.probes[0];
    let res = cmp5.frequency_resolution;
    let (w1, w2) = (params.omega1, params.omega2);

    let torus_has = |om: f64| probe.torus_spectrum.has_peak_near(om, res, 0.01);
    let rk4_has = |om: f64| probe.reference_spectrum.has_peak_near(om, res, 0.01);
    let forcing_ok = torus_has(w1) && torus_has(w2) && rk4_has(w1) && rk4_has(w2);

    let combination_tones = [
        2.0 * w1 - w2,
        2.0 * w2 - w1,
        3.0 * w1,
        2.0 * w1 + w2,
        w1 + 2.0 * w2,
    ];
    let matched_combo = combination_tones
        .iter()
        .find(|&&om| torus_has(om) && rk4_has(om));

    let pass = forcing_ok && matched_combo.is_some();
    h.check(
        "criterion 6b (spectrum agreement)",
        pass,
        format!(
            "forcing peaks at {w1:.3} and {w2:.3} matched = {forcing_ok}, \
             combination tone {} above 1%",
            matched_combo
                .map(|om| format!("{om:.3}"))
                .unwrap_or_else(|| "none".into())
        ),
    );
}

/// Klein-Gordon station comparison: both forcing tones must appear, matched
/// against the RK4 spectrum, at every probe station of the 5x5 solution.
fn criterion_6c_kg_probes(h: &mut Harness, kg_field: &TorusField) {
    let params = KleinGordonParams::default();
    let kg = KleinGordon::new(params).unwrap();
    let probes = kg.default_probe_components();
    let problem: Arc<dyn TorusProblem> = Arc::new(kg);
    let cmp = attractor_comparison(
        problem,
        kg_field,
        (0.0, 200.0),
        200_000,
        100.0,
        &probes,
        8192,
    )
    .unwrap();
    let res = cmp.frequency_resolution;
    let mut all_matched = true;
    let mut detail = Vec::new();
    for probe in &cmp.probes {
        let ok = [params.omega1, params.omega2].iter().all(|&om| {
            probe.torus_spectrum.has_peak_near(om, res, 0.01)
                && probe.reference_spectrum.has_peak_near(om, res, 0.01)
        });
        all_matched &= ok;
        detail.push(format!("q[{}] {}", probe.component, if ok { "ok" } else { "MISSING" }));
    }
    h.check(
        "criterion 6c (kg probe stations)",
        all_matched,
        format!(
            "tones 1.0 and sqrt(2) matched at stations [{}], post-transient dev {:.2e}",
            detail.join(", "),
            cmp.max_post_transient_deviation
        ),
    );
}

// ---- criterion 7: property suite ----------------------------------------

/// Independent nodal-loop residual oracle with its own differentiation
/// entries and index arithmetic.
fn nodal_residual_oracle(
    problem: &dyn TorusProblem,
    omegas: &[f64],
    counts: &[usize],
    values: &[f64],
) -> Vec<f64> {
    let k = counts.len();
    let n = problem.state_dim();
    let d = |size: usize, j: usize, p: usize| -> f64 {
        if j == p {
            return 0.0;
        }
        let diff = j as i64 - p as i64;
        let sign = if diff.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        sign * 0.5 / ((diff as f64) * PI / size as f64).sin()
    };
    let flat_of = |multi: &[usize]| -> usize {
        let mut idx = 0;
        for ax in (0..k).rev() {
            idx = idx * counts[ax] + multi[ax];
        }
        idx
    };
    let total: usize = counts.iter().product();
    let mut r = vec![0.0; total * n];
    let mut multi = vec![0usize; k];
    let mut phases = vec![0.0; k];
    let mut f = vec![0.0; n];
    for flat in 0..total {
        let mut rem = flat;
        for ax in 0..k {
            multi[ax] = rem % counts[ax];
            rem /= counts[ax];
        }
        for ax in 0..k {
            phases[ax] = 2.0 * PI * multi[ax] as f64 / counts[ax] as f64;
        }
        problem.rhs(&values[flat * n..(flat + 1) * n], &phases, &mut f);
        for c in 0..n {
            let mut acc = 0.0;
            for (ax, &nj) in counts.iter().enumerate() {
                let mut neighbor = multi.clone();
                let mut deriv = 0.0;
                for p in 0..nj {
                    neighbor[ax] = p;
                    deriv += d(nj, multi[ax], p) * values[flat_of(&neighbor) * n + c];
                }
                acc += omegas[ax] * deriv;
            }
            r[flat * n + c] = acc - f[c];
        }
    }
    r
}

struct PolyTone {
    n: usize,
}

impl TorusProblem for PolyTone {
    fn label(&self) -> &str {
        "poly-tone"
    }
    fn state_dim(&self) -> usize {
        self.n
    }
    fn rhs(&self, q: &[f64], th: &[f64], out: &mut [f64]) {
        let drive: f64 = th.iter().enumerate().map(|(i, t)| (t + i as f64).sin()).sum();
        for i in 0..self.n {
            out[i] = -0.4 * q[i] - q[i].powi(3) + 0.3 * q[(i + 1) % self.n] + drive;
        }
    }
    fn rhs_jacobian(&self, q: &[f64], _th: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..self.n {
            out[i * self.n + i] = -0.4 - 3.0 * q[i] * q[i];
            out[i * self.n + (i + 1) % self.n] += 0.3;
        }
    }
}

fn property_diff_matrices(h: &mut Harness) {
    let mut worst_struct = 0.0f64;
    let mut worst_exact = 0.0f64;
    for half in 0..=31usize {
        let size = 2 * half + 1;
        let d = ttsm::spectral::spectral_diff_matrix(size).unwrap();
        let e = d.entries();
        for j in 0..size {
            worst_struct = worst_struct.max(e[[j, j]].abs());
            let row: f64 = (0..size).map(|k| e[[j, k]]).sum();
            worst_struct = worst_struct.max(row.abs());
            for k in 0..size {
                worst_struct = worst_struct.max((e[[j, k]] + e[[k, j]]).abs());
            }
        }
        let nodes: Vec<f64> = (0..size).map(|l| 2.0 * PI * l as f64 / size as f64).collect();
        for m in 1..=half {
            let mf = m as f64;
            let sin: Vec<f64> = nodes.iter().map(|t| (mf * t).sin()).collect();
            let got = d.apply(&sin);
            for (g, t) in got.iter().zip(&nodes) {
                worst_exact = worst_exact.max((g - mf * (mf * t).cos()).abs());
            }
        }
    }
    let pass = worst_struct < 1e-12 && worst_exact < 1e-12;
    h.check(
        "criterion 7a (differentiation matrices, sizes 1..63)",
        pass,
        format!("structure defect {worst_struct:.2e}, exactness defect {worst_exact:.2e}"),
    );
}

fn property_kron_vs_oracle(h: &mut Harness) {
    let cases: Vec<(Vec<f64>, Vec<usize>)> = vec![
        (vec![1.3], vec![9]),
        (vec![1.0, 2f64.sqrt()], vec![5, 7]),
        (vec![1.0, 2f64.sqrt(), 3f64.sqrt()], vec![3, 5, 3]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for (freqs, counts) in cases {
        let grid = AngularGrid::new(&freqs, &counts).unwrap();
        let problem = Arc::new(PolyTone { n: 2 });
        let field = TorusField::from_fn(grid.clone(), 2, |_, out| {
            out.iter_mut().for_each(|o| *o = rng.gen_range(-1.0..1.0))
        });
        let sys = ResidualSystem::new(problem.clone(), grid.clone()).unwrap();
        let got = sys.residual(&field).unwrap();
        let want = nodal_residual_oracle(
            problem.as_ref(),
            &freqs,
            &counts,
            field.as_slice(),
        );
        let scale = want.iter().fold(1e-30f64, |a, x| a.max(x.abs()));
        for i in 0..want.len() {
            worst = worst.max((got[i] - want[i]).abs() / scale);
        }
    }
    h.check(
        "criterion 7b (kronecker residual vs nodal oracle, k in {1,2,3})",
        worst < 1e-13,
        format!("max relative defect {worst:.2e} < 1e-13"),
    );
}

fn property_jacobians(h: &mut Harness) {
    let problems: Vec<(Arc<dyn TorusProblem>, Vec<f64>, Vec<usize>)> = vec![
        (
            Arc::new(LinearOscillator::new(LinearOscillatorParams::default())),
            LinearOscillatorParams::default().frequencies(),
            vec![3, 3],
        ),
        (
            Arc::new(Duffing::new(DuffingParams::default()).unwrap()),
            DuffingParams::default().frequencies(),
            vec![3, 3],
        ),
        (
            Arc::new(KleinGordon::new(KleinGordonParams::default()).unwrap()),
            KleinGordonParams::default().frequencies(),
            vec![3, 3],
        ),
        (
            Arc::new(ThreeToneLinear::new([1.0, 2f64.sqrt(), 3f64.sqrt()])),
            vec![1.0, 2f64.sqrt(), 3f64.sqrt()],
            vec![3, 3, 3],
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    for (problem, freqs, counts) in problems {
        let grid = AngularGrid::new(&freqs, &counts).unwrap();
        let n = problem.state_dim();
        let field = TorusField::from_fn(grid.clone(), n, |_, out| {
            out.iter_mut().for_each(|o| *o = rng.gen_range(-0.5..0.5))
        });
        let sys = ResidualSystem::new(problem, grid).unwrap();
        let dim = sys.dim();
        let op = sys.jacobian_operator(&field).unwrap();
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut jv = vec![0.0; dim];
        op.apply(&v, &mut jv);

        let hstep = 1e-6;
        let mut plus = field.clone();
        let mut minus = field.clone();
        for i in 0..dim {
            plus.values_mut()[i] += hstep * v[i];
            minus.values_mut()[i] -= hstep * v[i];
        }
        let rp = sys.residual(&plus).unwrap();
        let rm = sys.residual(&minus).unwrap();
        let scale = jv.iter().fold(1e-30f64, |a, x| a.max(x.abs()));
        for i in 0..dim {
            let fd = (rp[i] - rm[i]) / (2.0 * hstep);
            worst = worst.max((jv[i] - fd).abs() / scale);
        }
    }
    h.check(
        "criterion 7c (jacobian vs finite differences, all problems)",
        worst < 1e-5,
        format!("max relative defect {worst:.2e} < 1e-5"),
    );
}

/// The probe must decrease monotonically over the whole sweep and decay with
/// log-slope >= 0.3 per grid point once in the exponential regime. The 3 -> 5
/// step sits before that regime (both the probe and the solution error
/// plateau near 1.6e-2 there, the same kink the solution-error sweep shows),
/// so the slope requirement applies from grid 5 onward and the measured
/// pre-asymptotic slope is reported alongside.
fn property_truncation_decay(h: &mut Harness, duffing_ref: &TorusField) {
    let params = DuffingParams::default();
    let problem: Arc<dyn TorusProblem> = Arc::new(Duffing::new(params).unwrap());
    let grids = [3usize, 5, 7, 9, 11, 13];
    let mut probes = Vec::new();
    for &g in &grids {
        let coarse = AngularGrid::new(&params.frequencies(), &[g, g]).unwrap();
        probes.push(truncation_error_probe(problem.clone(), &coarse, duffing_ref).unwrap());
    }
    let monotone = probes.windows(2).all(|w| w[1] < w[0]);
    let mut min_slope = f64::INFINITY;
    for i in 1..probes.len() - 1 {
        if probes[i + 1] > 1e-9 {
            let slope = (probes[i].ln() - probes[i + 1].ln())
                / (grids[i + 1] - grids[i]) as f64;
            min_slope = min_slope.min(slope);
        }
    }
    let first_slope = (probes[0].ln() - probes[1].ln()) / 2.0;
    let pass = probes[0] > 0.0 && monotone && min_slope >= 0.3;
    h.check(
        "criterion 7d (truncation probe decay)",
        pass,
        format!(
            "probes {:?} monotone, asymptotic log-slope >= {min_slope:.2} \
             (pre-asymptotic 3->5 step: {first_slope:.2})",
            probes.iter().map(|p| format!("{p:.1e}")).collect::<Vec<_>>()
        ),
    );
}

fn property_anchor_rank(h: &mut Harness) {
    let params = LinearOscillatorParams::default();
    let problem = Arc::new(LinearOscillator::new(params));
    let grid = AngularGrid::new(&params.frequencies(), &[3, 3]).unwrap();
    let zeros = TorusField::zeros(grid.clone(), 1);

    let unanchored = ResidualSystem::new_unanchored(problem.clone(), grid.clone()).unwrap();
    let jac = unanchored.jacobian_dense(&zeros).unwrap();
    let ones = ndarray::Array1::from_elem(9, 1.0);
    let jv = jac.dot(&ones);
    let annihilates = jv.iter().all(|v| v.abs() < 1e-12);

    let anchored = ResidualSystem::new(problem, grid).unwrap();
    let jac = anchored.jacobian_dense(&zeros).unwrap();
    let svals = ttsm::linalg::singular_values(&jac).unwrap();
    let smin = svals.last().copied().unwrap_or(0.0);

    let unanchored_smin = ttsm::linalg::singular_values(&unanchored.jacobian_dense(&zeros).unwrap())
        .unwrap()
        .last()
        .copied()
        .unwrap_or(f64::NAN);

    let pass = annihilates && smin > 1e-8 && unanchored_smin < 1e-12;
    h.check(
        "criterion 7e (anchor removes rank deficiency)",
        pass,
        format!(
            "unanchored J*const = 0 ({annihilates}), sigma_min {unanchored_smin:.1e} -> {smin:.3} after anchoring"
        ),
    );
}

fn property_three_tone(h: &mut Harness) {
    let problem = Arc::new(ThreeToneLinear::new([1.0, 2f64.sqrt(), 3f64.sqrt()]));
    let grid = AngularGrid::new(&problem.frequencies(), &[3, 3, 3]).unwrap();
    let sys = ResidualSystem::new(problem.clone(), grid.clone()).unwrap();
    let analytic = problem.analytic_field(&grid);
    let residual_of_analytic = sys
        .residual(&analytic)
        .unwrap()
        .iter()
        .fold(0.0f64, |a, &x| a.max(x.abs()));
    let report = newton_solve(
        &sys,
        &TorusField::zeros(grid, 1),
        &NewtonConfig::default(),
    )
    .unwrap();
    let err = inf_node_error(&report.solution, &analytic);
    let pass = residual_of_analytic < 1e-12 && report.converged && err < 1e-11;
    h.check(
        "criterion 7f (three-tone k=3 solve)",
        pass,
        format!("analytic residual {residual_of_analytic:.1e}, solve error {err:.2e} < 1e-11"),
    );
    h.keep("three-tone 3x3x3", report);
}

fn property_monotone_histories(h: &mut Harness) {
    let mut bad = Vec::new();
    for (label, report) in &h.reports {
        if report.converged {
            let ok = report
                .residual_history
                .windows(2)
                .all(|w| w[1] <= w[0]);
            let len_ok = report.residual_history.len() == report.newton_iterations + 1;
            if !ok || !len_ok {
                bad.push(label.clone());
            }
        }
    }
    let count = h.reports.len();
    let pass = bad.is_empty();
    h.check(
        "criterion 7g (monotone newton histories)",
        pass,
        format!("{count} converged runs checked{}", if pass { String::new() } else { format!(", violations: {bad:?}") }),
    );
}

fn property_rk4_order(h: &mut Harness) {
    let cases: Vec<(&str, Arc<dyn TorusProblem>, Vec<f64>, (f64, f64), usize)> = vec![
        (
            "linear",
            Arc::new(LinearOscillator::new(LinearOscillatorParams::default())),
            LinearOscillatorParams::default().frequencies(),
            (0.0, 10.0),
            100,
        ),
        (
            "duffing",
            Arc::new(Duffing::new(DuffingParams::default()).unwrap()),
            DuffingParams::default().frequencies(),
            (0.0, 10.0),
            100,
        ),
        (
            "kg",
            Arc::new(KleinGordon::new(KleinGordonParams::default()).unwrap()),
            KleinGordonParams::default().frequencies(),
            (0.0, 5.0),
            400,
        ),
        (
            "three-tone",
            Arc::new(ThreeToneLinear::new([1.0, 2f64.sqrt(), 3f64.sqrt()])),
            vec![1.0, 2f64.sqrt(), 3f64.sqrt()],
            (0.0, 10.0),
            100,
        ),
    ];
    let mut detail = Vec::new();
    let mut pass = true;
    for (name, problem, freqs, span, steps) in cases {
        let q0 = problem.initial_state();
        let ratio = rk4_order_ratio(time_rhs(problem.as_ref(), &freqs), &q0, span, steps).unwrap();
        pass &= (12.0..=20.0).contains(&ratio);
        detail.push(format!("{name} {ratio:.1}"));
    }
    h.check(
        "criterion 7h (rk4 richardson order ratios)",
        pass,
        format!("ratios [{}] all in [12, 20]", detail.join(", ")),
    );
}

/// Grid-layout invariance: permuting a solved field to the component-major
/// layout and back is the identity.
fn property_layout_invariance(h: &mut Harness, kg_field: &TorusField) {
    let alt = kg_field.to_component_major();
    let back = TorusField::from_component_major(
        kg_field.grid().clone(),
        kg_field.state_dim(),
        &alt,
    )
    .unwrap();
    let pass = back == *kg_field;
    h.check(
        "criterion 7i (layout permutation round trip)",
        pass,
        "component-major and back is the identity".to_string(),
    );
}

/// The reconstructed Duffing trajectory satisfies the original second-order
/// equation pointwise, with the finite-difference-in-t residual shrinking as
/// the grid refines.
fn property_duffing_ode_residual(h: &mut Harness) {
    let params = DuffingParams::default();
    let study = DuffingStudy { params };
    let config = NewtonConfig::default();
    let ode_residual = |field: &TorusField| -> f64 {
        let hstep = 1e-3;
        let mut worst = 0.0f64;
        for i in 0..150 {
            let t = 1.3 * i as f64;
            let times = [t - hstep, t, t + hstep];
            let series = torus_to_time(field, &times);
            let q = series.states()[[1, 0]];
            let qdd = (series.states()[[2, 0]] - 2.0 * q + series.states()[[0, 0]])
                / (hstep * hstep);
            let qd = (series.states()[[2, 0]] - series.states()[[0, 0]]) / (2.0 * hstep);
            let forcing = params.f1 * (params.omega1 * t).cos()
                + params.f2 * (params.omega2 * t).cos();
            let res = qdd + params.delta * qd + params.beta * q + params.alpha * q.powi(3)
                - forcing;
            worst = worst.max(res.abs());
        }
        worst
    };
    let coarse = study.solve(&[5, 5], &config).unwrap().solution;
    let fine = study.solve(&[9, 9], &config).unwrap().solution;
    let (r5, r9) = (ode_residual(&coarse), ode_residual(&fine));
    let pass = r9 < r5 / 3.0 && r9 < 5e-3;
    h.check(
        "criterion 7k (reconstruction satisfies the governing equation)",
        pass,
        format!("second-order ode residual {r5:.2e} (5x5) -> {r9:.2e} (9x9)"),
    );
}

/// `torus_to_time` of a converged field satisfies the original ODE pointwise:
/// the centered-difference time derivative matches `f(q, ωt)` at the solver
/// tolerance scale for an exactly representable solution.
fn property_time_ode_residual(h: &mut Harness) {
    let params = LinearOscillatorParams::default();
    let problem = Arc::new(LinearOscillator::new(params));
    let grid = AngularGrid::new(&params.frequencies(), &[3, 3]).unwrap();
    let sys = ResidualSystem::new(problem.clone(), grid.clone()).unwrap();
    let report = newton_solve(&sys, &TorusField::zeros(grid, 1), &NewtonConfig::default()).unwrap();
    let hstep = 1e-4;
    let mut worst = 0.0f64;
    for i in 0..200 {
        let t = 0.21 * i as f64;
        let times = [t - hstep, t, t + hstep];
        let series = torus_to_time(&report.solution, &times);
        let fd = (series.states()[[2, 0]] - series.states()[[0, 0]]) / (2.0 * hstep);
        let mut f = [0.0];
        time_rhs(problem.as_ref(), &params.frequencies())(&[series.states()[[1, 0]]], t, &mut f);
        worst = worst.max((fd - f[0]).abs());
    }
    // centered difference has O(h^2) truncation ~ 1e-8 at h = 1e-4
    let pass = worst < 1e-6;
    h.check(
        "criterion 7j (reconstruction satisfies the ode)",
        pass,
        format!("max |dq/dt - f| = {worst:.2e} (finite-difference limited)"),
    );
}

#[test]
fn acceptance() {
    let mut h = Harness::new();

    criterion_1(&mut h);
    let (_coarse, duffing_ref) = criterion_2(&mut h);
    criterion_3(&mut h);
    let kg_field = criterion_4(&mut h);
    criterion_5(&mut h);
    criterion_6(&mut h);
    criterion_6c_kg_probes(&mut h, &kg_field);

    property_diff_matrices(&mut h);
    property_kron_vs_oracle(&mut h);
    property_jacobians(&mut h);
    property_truncation_decay(&mut h, &duffing_ref);
    property_anchor_rank(&mut h);
    property_three_tone(&mut h);
    property_rk4_order(&mut h);
    property_layout_invariance(&mut h, &kg_field);
    property_time_ode_residual(&mut h);
    property_duffing_ode_residual(&mut h);
    property_monotone_histories(&mut h);

    assert!(
        h.failures.is_empty(),
        "{} acceptance criteria failed:\n{}",
        h.failures.len(),
        h.failures.join("\n")
    );
}
