//! A three-frequency linear case, `q̇ = sin θ₁ + cos θ₂ + sin θ₃`, exercising
//! the k = 3 Kronecker-sum lifting end to end. Like the two-tone linear
//! oscillator it has a neutral constant direction and is anchored at the
//! origin node; the analytic torus solution is
//! `q = (1 − cos θ₁)/ω₁ + sin θ₂/ω₂ + (1 − cos θ₃)/ω₃`.

use crate::field::TorusField;
use crate::grid::AngularGrid;
use crate::problem::{Anchor, TorusProblem};

#[derive(Debug, Clone)]
pub struct ThreeToneLinear {
    omegas: [f64; 3],
}

impl ThreeToneLinear {
    pub fn new(omegas: [f64; 3]) -> Self {
        Self { omegas }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.omegas.to_vec()
    }

    pub fn analytic_field(&self, grid: &AngularGrid) -> TorusField {
        let w = self.omegas;
        TorusField::from_fn(grid.clone(), 1, move |th, out| {
            out[0] = (1.0 - th[0].cos()) / w[0] + th[1].sin() / w[1] + (1.0 - th[2].cos()) / w[2]
        })
    }
}

impl TorusProblem for ThreeToneLinear {
    fn label(&self) -> &str {
        "three_tone"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn rhs(&self, _state: &[f64], phases: &[f64], out: &mut [f64]) {
        out[0] = phases[0].sin() + phases[1].cos() + phases[2].sin();
    }

    fn rhs_jacobian(&self, _state: &[f64], _phases: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }

    fn anchor(&self) -> Option<Anchor> {
        Some(Anchor::component(vec![0, 0, 0], 0, 0.0))
    }
}
