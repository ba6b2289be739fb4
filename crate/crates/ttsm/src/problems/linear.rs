//! The forced linear oscillator `q̇ = sin(ω₀ t) + cos(ω_f t)`.
//!
//! On the torus this reads `ω₀ ∂_{θ₁} q + ω_f ∂_{θ₂} q = sin θ₁ + cos θ₂` and
//! has the closed-form solution `q(θ₁, θ₂) = 1/ω₀ − cos θ₁/ω₀ + sin θ₂/ω_f`,
//! a degree-1 trigonometric polynomial: any odd grid of at least 3 nodes per
//! axis represents it exactly. The dynamics have no restoring term, so the
//! solution is only determined up to a constant shift; the problem anchors
//! `q` at node (0, 0) to the initial value `q(0) = 0`.

use serde::{Deserialize, Serialize};

use crate::field::TorusField;
use crate::grid::AngularGrid;
use crate::problem::{Anchor, TorusProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearOscillatorParams {
    /// Frequency of the sine tone, carried by θ₁.
    pub omega0: f64,
    /// Frequency of the cosine tone, carried by θ₂.
    pub omegaf: f64,
}

impl Default for LinearOscillatorParams {
    fn default() -> Self {
        Self {
            omega0: 1.0,
            omegaf: 2f64.sqrt(),
        }
    }
}

impl LinearOscillatorParams {
    pub fn new(omega0: f64, omegaf: f64) -> Self {
        Self { omega0, omegaf }
    }

    /// The near-commensurate pair `(1, 0.97 + 0.03·√2)` with a slow beat.
    pub fn beat_pair() -> Self {
        Self {
            omega0: 1.0,
            omegaf: 0.97 + 0.03 * 2f64.sqrt(),
        }
    }

    /// The widely separated pair `{1, 2π/100}`. Which tone carries which
    /// frequency is a free assignment; `slow_first` puts `2π/100` on the
    /// sine tone.
    pub fn large_ratio_pair(slow_first: bool) -> Self {
        let slow = 2.0 * std::f64::consts::PI / 100.0;
        if slow_first {
            Self {
                omega0: slow,
                omegaf: 1.0,
            }
        } else {
            Self {
                omega0: 1.0,
                omegaf: slow,
            }
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        vec![self.omega0, self.omegaf]
    }
}

#[derive(Debug, Clone)]
pub struct LinearOscillator {
    params: LinearOscillatorParams,
}

impl LinearOscillator {
    pub fn new(params: LinearOscillatorParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &LinearOscillatorParams {
        &self.params
    }

    /// `q(t) = 1/ω₀ − cos(ω₀ t)/ω₀ + sin(ω_f t)/ω_f`, the solution with
    /// `q(0) = 0`.
    pub fn analytic_time(&self, t: f64) -> f64 {
        let p = &self.params;
        1.0 / p.omega0 - (p.omega0 * t).cos() / p.omega0 + (p.omegaf * t).sin() / p.omegaf
    }

    /// The torus lift of the analytic solution, sampled on a grid.
    pub fn analytic_field(&self, grid: &AngularGrid) -> TorusField {
        let p = *self.params();
        TorusField::from_fn(grid.clone(), 1, move |th, out| {
            out[0] = 1.0 / p.omega0 - th[0].cos() / p.omega0 + th[1].sin() / p.omegaf
        })
    }
}

impl TorusProblem for LinearOscillator {
    fn label(&self) -> &str {
        "linear"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn rhs(&self, _state: &[f64], phases: &[f64], out: &mut [f64]) {
        out[0] = phases[0].sin() + phases[1].cos();
    }

    fn rhs_jacobian(&self, _state: &[f64], _phases: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }

    fn anchor(&self) -> Option<Anchor> {
        Some(Anchor::component(vec![0, 0], 0, 0.0))
    }
}
