//! The abstract dynamical-system interface on torus phases.

use serde::{Deserialize, Serialize};

/// Pins selected state components at one collocation node to prescribed
/// values, replacing the corresponding residual rows. Needed when the dynamics
/// have a neutral direction and the collocation Jacobian would lose rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    /// Node multi-index, one entry per torus axis.
    pub node: Vec<usize>,
    /// Anchored state components.
    pub components: Vec<usize>,
    /// Prescribed values, one per anchored component.
    pub values: Vec<f64>,
}

impl Anchor {
    /// Anchors the full state vector at one node.
    pub fn full_state(node: Vec<usize>, values: Vec<f64>) -> Self {
        let components = (0..values.len()).collect();
        Self {
            node,
            components,
            values,
        }
    }

    /// Anchors a single component at one node.
    pub fn component(node: Vec<usize>, component: usize, value: f64) -> Self {
        Self {
            node,
            components: vec![component],
            values: vec![value],
        }
    }
}

/// A dynamical system `q̇ = f(q, θ_1, …, θ_k)` posed on torus phases.
///
/// Implementations must be pure: residual assembly may evaluate nodes in any
/// order or concurrently. `rhs` must be 2π-periodic in every phase.
pub trait TorusProblem: Send + Sync {
    fn label(&self) -> &str;

    fn state_dim(&self) -> usize;

    /// Writes `f(state, phases)` into `out` (length `state_dim`).
    fn rhs(&self, state: &[f64], phases: &[f64], out: &mut [f64]);

    /// Writes the state Jacobian `∂f/∂q` into `out` in row-major order
    /// (length `state_dim²`).
    fn rhs_jacobian(&self, state: &[f64], phases: &[f64], out: &mut [f64]);

    /// Anchor declared by problems with a neutral direction.
    fn anchor(&self) -> Option<Anchor> {
        None
    }

    /// Initial condition used by companion time-accurate integrations.
    fn initial_state(&self) -> Vec<f64> {
        vec![0.0; self.state_dim()]
    }
}

/// Maximum relative deviation between `rhs_jacobian` and a central finite
/// difference of `rhs` with step `1e-6·(1+|q|)`, at one state/phase point.
pub fn jacobian_fd_error(problem: &dyn TorusProblem, state: &[f64], phases: &[f64]) -> f64 {
    let n = problem.state_dim();
    let mut jac = vec![0.0; n * n];
    problem.rhs_jacobian(state, phases, &mut jac);
    let scale = jac.iter().fold(1.0f64, |a, x| a.max(x.abs()));

    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut q = state.to_vec();
    let mut worst = 0.0f64;
    for j in 0..n {
        let h = 1e-6 * (1.0 + state[j].abs());
        let orig = q[j];
        q[j] = orig + h;
        problem.rhs(&q, phases, &mut plus);
        q[j] = orig - h;
        problem.rhs(&q, phases, &mut minus);
        q[j] = orig;
        for i in 0..n {
            let fd = (plus[i] - minus[i]) / (2.0 * h);
            worst = worst.max((jac[i * n + j] - fd).abs() / scale);
        }
    }
    worst
}
