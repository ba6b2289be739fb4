//! Time-accurate reference machinery: RK4 integration, reconstruction of a
//! torus field along the physical trajectory, frequency spectra, and the
//! fine-grid error norm used by the convergence studies.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::TtsmError;
use crate::field::TorusField;
use crate::problem::TorusProblem;
use crate::spectral::dft_coefficients;

/// Uniformly sampled trajectory of an `n`-dimensional state.
#[derive(Debug, Clone, Serialize)]
pub struct TimeSeries {
    times: Vec<f64>,
    states: Array2<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, states: Array2<f64>) -> Result<Self, TtsmError> {
        if times.len() != states.nrows() {
            return Err(TtsmError::DimensionMismatch {
                context: "TimeSeries::new",
                expected: times.len(),
                actual: states.nrows(),
            });
        }
        if times.len() >= 3 {
            let dt = times[1] - times[0];
            for w in times.windows(2) {
                if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
                    return Err(TtsmError::InvalidConfig(
                        "TimeSeries requires uniform spacing".into(),
                    ));
                }
            }
        }
        Ok(Self { times, states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &Array2<f64> {
        &self.states
    }

    pub fn state_dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Keeps every `stride`-th sample.
    pub fn decimate(&self, stride: usize) -> TimeSeries {
        let stride = stride.max(1);
        let idx: Vec<usize> = (0..self.len()).step_by(stride).collect();
        let times = idx.iter().map(|&i| self.times[i]).collect();
        let mut states = Array2::zeros((idx.len(), self.state_dim()));
        for (row, &i) in idx.iter().enumerate() {
            states.row_mut(row).assign(&self.states.row(i));
        }
        TimeSeries { times, states }
    }

    /// Max absolute difference to another series on the shared time grid,
    /// restricted to `t >= cut` and to the given components.
    pub fn max_deviation(&self, other: &TimeSeries, cut: f64, comps: &[usize]) -> f64 {
        let mut worst = 0.0f64;
        for (i, &t) in self.times.iter().enumerate() {
            if t < cut {
                continue;
            }
            for &c in comps {
                worst = worst.max((self.states[[i, c]] - other.states[[i, c]]).abs());
            }
        }
        worst
    }
}

/// Classical fourth-order Runge-Kutta with fixed step over `t_span`,
/// recording all `num_steps + 1` samples.
pub fn rk4_integrate<F>(
    rhs: F,
    q0: &[f64],
    t_span: (f64, f64),
    num_steps: usize,
) -> Result<TimeSeries, TtsmError>
where
    F: Fn(&[f64], f64, &mut [f64]),
{
    if num_steps == 0 {
        return Err(TtsmError::InvalidConfig("num_steps must be >= 1".into()));
    }
    let n = q0.len();
    let h = (t_span.1 - t_span.0) / num_steps as f64;
    let mut times = Vec::with_capacity(num_steps + 1);
    let mut states = Array2::zeros((num_steps + 1, n));

    let mut q = q0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    times.push(t_span.0);
    states.row_mut(0).assign(&ndarray::ArrayView1::from(&q));

    for step in 0..num_steps {
        let t = t_span.0 + step as f64 * h;
        rhs(&q, t, &mut k1);
        for i in 0..n {
            tmp[i] = q[i] + 0.5 * h * k1[i];
        }
        rhs(&tmp, t + 0.5 * h, &mut k2);
        for i in 0..n {
            tmp[i] = q[i] + 0.5 * h * k2[i];
        }
        rhs(&tmp, t + 0.5 * h, &mut k3);
        for i in 0..n {
            tmp[i] = q[i] + h * k3[i];
        }
        rhs(&tmp, t + h, &mut k4);
        for i in 0..n {
            q[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_next = t_span.0 + (step + 1) as f64 * h;
        if q.iter().any(|v| !v.is_finite()) {
            return Err(TtsmError::NonFiniteState { time: t_next });
        }
        times.push(t_next);
        states
            .row_mut(step + 1)
            .assign(&ndarray::ArrayView1::from(&q));
    }
    TimeSeries::new(times, states)
}

/// Adapts a torus problem to a time ODE by driving the phases at the grid
/// frequencies, `θ_j = ω_j t mod 2π`.
pub fn time_rhs<'a>(
    problem: &'a dyn TorusProblem,
    frequencies: &'a [f64],
) -> impl Fn(&[f64], f64, &mut [f64]) + 'a {
    let two_pi = 2.0 * PI;
    move |q: &[f64], t: f64, out: &mut [f64]| {
        let phases: Vec<f64> = frequencies
            .iter()
            .map(|w| (w * t).rem_euclid(two_pi))
            .collect();
        problem.rhs(q, &phases, out);
    }
}

/// Richardson order check: `‖q_h − q_{h/2}‖_∞ / ‖q_{h/2} − q_{h/4}‖_∞` at the
/// final time; approximately 16 for a fourth-order scheme.
pub fn rk4_order_ratio<F>(
    rhs: F,
    q0: &[f64],
    t_span: (f64, f64),
    base_steps: usize,
) -> Result<f64, TtsmError>
where
    F: Fn(&[f64], f64, &mut [f64]),
{
    let end_state = |steps: usize| -> Result<Vec<f64>, TtsmError> {
        let ts = rk4_integrate(&rhs, q0, t_span, steps)?;
        Ok(ts.states().row(ts.len() - 1).to_vec())
    };
    let a = end_state(base_steps)?;
    let b = end_state(2 * base_steps)?;
    let c = end_state(4 * base_steps)?;
    let coarse = a
        .iter()
        .zip(&b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let fine = b
        .iter()
        .zip(&c)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(coarse / fine)
}

/// Evaluates a torus field along the physical trajectory: `q(t)` is the
/// interpolant at phases `θ_j = ω_j t mod 2π`. No alignment is needed for
/// non-autonomous problems.
pub fn torus_to_time(field: &TorusField, times: &[f64]) -> TimeSeries {
    let coeffs = dft_coefficients(field);
    let freqs = field.grid().frequencies().to_vec();
    let n = field.state_dim();
    let two_pi = 2.0 * PI;
    let mut states = Array2::zeros((times.len(), n));
    let mut phases = vec![0.0; freqs.len()];
    let mut out = vec![0.0; n];
    for (row, &t) in times.iter().enumerate() {
        for (p, w) in phases.iter_mut().zip(&freqs) {
            *p = (w * t).rem_euclid(two_pi);
        }
        coeffs.evaluate(&phases, &mut out);
        states.row_mut(row).assign(&ndarray::ArrayView1::from(&out));
    }
    TimeSeries {
        times: times.to_vec(),
        states,
    }
}

/// One-sided magnitude spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    /// Angular frequencies, ascending, radians per unit time.
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl Spectrum {
    /// Frequency spacing between bins.
    pub fn resolution(&self) -> f64 {
        if self.frequencies.len() > 1 {
            self.frequencies[1] - self.frequencies[0]
        } else {
            0.0
        }
    }

    /// Local maxima with amplitude at least `rel_threshold` of the peak
    /// amplitude, as `(frequency, amplitude)` pairs.
    pub fn peaks(&self, rel_threshold: f64) -> Vec<(f64, f64)> {
        let max = self.amplitudes.iter().cloned().fold(0.0, f64::max);
        if max == 0.0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for i in 1..self.amplitudes.len().saturating_sub(1) {
            let a = self.amplitudes[i];
            if a >= rel_threshold * max
                && a >= self.amplitudes[i - 1]
                && a > self.amplitudes[i + 1]
            {
                out.push((self.frequencies[i], a));
            }
        }
        out
    }

    /// True when some peak above the threshold lies within `tol` of `omega`.
    pub fn has_peak_near(&self, omega: f64, tol: f64, rel_threshold: f64) -> bool {
        self.peaks(rel_threshold)
            .iter()
            .any(|&(f, _)| (f - omega).abs() <= tol)
    }
}

/// Magnitude spectrum of one state component over a time window: the signal
/// is mean-removed, Hann-windowed and transformed by a plain periodogram.
/// Peak locations are the tested quantity; the amplitude normalization is the
/// usual one-sided coherent-gain convention.
pub fn compute_spectrum(
    series: &TimeSeries,
    component: usize,
    window: (f64, f64),
) -> Result<Spectrum, TtsmError> {
    let idx: Vec<usize> = series
        .times()
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= window.0 && t <= window.1)
        .map(|(i, _)| i)
        .collect();
    if idx.len() < 4 {
        return Err(TtsmError::WindowTooShort { samples: idx.len() });
    }
    let m = idx.len();
    let dt = series.times()[idx[1]] - series.times()[idx[0]];
    let signal: Vec<f64> = idx.iter().map(|&i| series.states()[[i, component]]).collect();
    let mean = signal.iter().sum::<f64>() / m as f64;

    let mut windowed = vec![0.0; m];
    let mut gain = 0.0;
    for (i, w) in windowed.iter_mut().enumerate() {
        let hann = 0.5 * (1.0 - (2.0 * PI * i as f64 / (m - 1) as f64).cos());
        *w = (signal[i] - mean) * hann;
        gain += hann;
    }

    let bins = m / 2;
    let mut frequencies = Vec::with_capacity(bins);
    let mut amplitudes = Vec::with_capacity(bins);
    let base = 2.0 * PI / (m as f64 * dt);
    for k in 0..bins {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &w) in windowed.iter().enumerate() {
            acc += w * Complex64::from_polar(1.0, -2.0 * PI * (k * i) as f64 / m as f64);
        }
        frequencies.push(k as f64 * base);
        amplitudes.push(2.0 * acc.norm() / gain);
    }
    Ok(Spectrum {
        frequencies,
        amplitudes,
    })
}

/// `‖field − P(interpolant of reference)‖_∞` over the coarse nodes, all state
/// components: the solution error relative to a fine-grid reference.
pub fn field_error_norm(field: &TorusField, reference: &TorusField) -> Result<f64, TtsmError> {
    if !field.grid().same_frequencies(reference.grid()) {
        return Err(TtsmError::FrequencyMismatch);
    }
    if field.state_dim() != reference.state_dim() {
        return Err(TtsmError::DimensionMismatch {
            context: "field_error_norm",
            expected: reference.state_dim(),
            actual: field.state_dim(),
        });
    }
    let sampled = dft_coefficients(reference).sample_on(field.grid());
    field.max_abs_diff(&sampled)
}
