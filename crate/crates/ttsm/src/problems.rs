//! Benchmark problems: a forced linear oscillator with a closed-form torus
//! solution, the two-tone Duffing oscillator, a spatially discretized
//! nonlinear Klein-Gordon equation, and a three-tone linear case exercising
//! the k = 3 lifting.

pub mod duffing;
pub mod klein_gordon;
pub mod linear;
pub mod three_tone;

pub use duffing::{Duffing, DuffingParams};
pub use klein_gordon::{KleinGordon, KleinGordonParams};
pub use linear::{LinearOscillator, LinearOscillatorParams};
pub use three_tone::ThreeToneLinear;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{jacobian_fd_error, TorusProblem};
    use std::f64::consts::PI;

    fn shipped() -> Vec<(Box<dyn TorusProblem>, usize)> {
        vec![
            (
                Box::new(LinearOscillator::new(LinearOscillatorParams::default())),
                2,
            ),
            (
                Box::new(Duffing::new(DuffingParams::default()).unwrap()),
                2,
            ),
            (
                Box::new(KleinGordon::new(KleinGordonParams::default()).unwrap()),
                2,
            ),
            (
                Box::new(ThreeToneLinear::new([1.0, 2f64.sqrt(), 3f64.sqrt()])),
                3,
            ),
        ]
    }

    #[test]
    fn rhs_is_two_pi_periodic_in_every_phase() {
        for (problem, k) in shipped() {
            let n = problem.state_dim();
            let state: Vec<f64> = (0..n).map(|i| 0.4 * ((i as f64) * 1.3).sin()).collect();
            let phases: Vec<f64> = (0..k).map(|j| 0.7 + 0.9 * j as f64).collect();
            let mut base = vec![0.0; n];
            problem.rhs(&state, &phases, &mut base);
            let scale = base.iter().fold(1.0f64, |a, x| a.max(x.abs()));
            for axis in 0..k {
                let mut shifted = phases.clone();
                shifted[axis] += 2.0 * PI;
                let mut out = vec![0.0; n];
                problem.rhs(&state, &shifted, &mut out);
                for (a, b) in base.iter().zip(&out) {
                    assert!(
                        (a - b).abs() < 1e-13 * scale,
                        "{} not periodic in phase {axis}",
                        problem.label()
                    );
                }
            }
        }
    }

    #[test]
    fn every_shipped_jacobian_passes_the_fd_check() {
        for (problem, k) in shipped() {
            let n = problem.state_dim();
            for trial in 0..3 {
                let state: Vec<f64> = (0..n)
                    .map(|i| 0.5 * ((i + trial) as f64 * 0.77).sin())
                    .collect();
                let phases: Vec<f64> = (0..k).map(|j| (j + trial) as f64 * 1.1).collect();
                let err = jacobian_fd_error(problem.as_ref(), &state, &phases);
                assert!(err < 5e-6, "{}: fd error {err}", problem.label());
            }
        }
    }
}
