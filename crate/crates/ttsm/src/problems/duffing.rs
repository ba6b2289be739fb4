//! The two-tone Duffing oscillator
//! `q̈ + δ q̇ + β q + α q³ = f₁ cos(ω₁ t) + f₂ cos(ω₂ t)`,
//! lifted with state `(q, q̇)`. Dissipation selects a unique attracting torus,
//! so no anchor is needed. The target operating point is moderately nonlinear
//! and is reached by a two-stage homotopy from a weak one.

use serde::{Deserialize, Serialize};

use crate::error::TtsmError;
use crate::problem::TorusProblem;
use crate::solver::{HomotopySchedule, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuffingParams {
    pub delta: f64,
    pub beta: f64,
    pub alpha: f64,
    pub f1: f64,
    pub f2: f64,
    pub omega1: f64,
    pub omega2: f64,
}

impl Default for DuffingParams {
    /// The target operating point: δ=0.1, β=1, α=3, f₁=0.05, f₂=0.04,
    /// ω=(1, √2).
    fn default() -> Self {
        Self {
            delta: 0.1,
            beta: 1.0,
            alpha: 3.0,
            f1: 0.05,
            f2: 0.04,
            omega1: 1.0,
            omega2: 2f64.sqrt(),
        }
    }
}

impl DuffingParams {
    /// The weak operating point (α=1, f₁=0.02, f₂=0.015) used as the first
    /// homotopy stage.
    pub fn weak() -> Self {
        Self {
            alpha: 1.0,
            f1: 0.02,
            f2: 0.015,
            ..Self::default()
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        vec![self.omega1, self.omega2]
    }

    /// Applies named overrides (`delta`, `beta`, `alpha`, `f1`, `f2`).
    pub fn with_overrides(mut self, overrides: &ParamSet) -> Result<Self, TtsmError> {
        for (key, &value) in overrides {
            match key.as_str() {
                "delta" => self.delta = value,
                "beta" => self.beta = value,
                "alpha" => self.alpha = value,
                "f1" => self.f1 = value,
                "f2" => self.f2 = value,
                other => {
                    return Err(TtsmError::InvalidConfig(format!(
                        "unknown duffing parameter '{other}'"
                    )))
                }
            }
        }
        Ok(self)
    }

    fn as_param_set(&self) -> ParamSet {
        let mut set = ParamSet::new();
        set.insert("alpha".into(), self.alpha);
        set.insert("f1".into(), self.f1);
        set.insert("f2".into(), self.f2);
        set
    }
}

/// Two-stage homotopy schedule ending at `target`.
pub fn standard_schedule(target: &DuffingParams) -> HomotopySchedule {
    let stages = vec![DuffingParams::weak().as_param_set(), target.as_param_set()];
    HomotopySchedule::new(stages).expect("two stages")
}

#[derive(Debug, Clone)]
pub struct Duffing {
    params: DuffingParams,
}

impl Duffing {
    pub fn new(params: DuffingParams) -> Result<Self, TtsmError> {
        if !(params.delta > 0.0) {
            return Err(TtsmError::InvalidConfig(
                "duffing requires positive damping delta".into(),
            ));
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &DuffingParams {
        &self.params
    }
}

impl TorusProblem for Duffing {
    fn label(&self) -> &str {
        "duffing"
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn rhs(&self, state: &[f64], phases: &[f64], out: &mut [f64]) {
        let p = &self.params;
        let (q, v) = (state[0], state[1]);
        out[0] = v;
        out[1] = -p.delta * v - p.beta * q - p.alpha * q * q * q
            + p.f1 * phases[0].cos()
            + p.f2 * phases[1].cos();
    }

    fn rhs_jacobian(&self, state: &[f64], _phases: &[f64], out: &mut [f64]) {
        let p = &self.params;
        let q = state[0];
        out[0] = 0.0;
        out[1] = 1.0;
        out[2] = -p.beta - 3.0 * p.alpha * q * q;
        out[3] = -p.delta;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::jacobian_fd_error;

    #[test]
    fn rhs_at_rest_is_total_forcing() {
        let d = Duffing::new(DuffingParams::default()).unwrap();
        let mut out = [0.0; 2];
        d.rhs(&[0.0, 0.0], &[0.0, 0.0], &mut out);
        assert_eq!(out[0], 0.0);
        assert!((out[1] - 0.09).abs() < 1e-15);
    }

    #[test]
    fn jacobian_closed_form() {
        let d = Duffing::new(DuffingParams::default()).unwrap();
        let mut jac = [0.0; 4];
        d.rhs_jacobian(&[1.0, 0.0], &[0.0, 0.0], &mut jac);
        assert_eq!(jac, [0.0, 1.0, -10.0, -0.1]);
        let err = jacobian_fd_error(&d, &[0.4, -0.2], &[1.1, 2.3]);
        assert!(err < 5e-6);
    }

    #[test]
    fn odd_symmetry_under_half_turn() {
        // flipping the state and advancing both phases by π negates the field
        let d = Duffing::new(DuffingParams::default()).unwrap();
        let q = [0.31, -0.12];
        let th = [0.7, 2.1];
        let mut f = [0.0; 2];
        let mut g = [0.0; 2];
        d.rhs(&q, &th, &mut f);
        let neg = [-q[0], -q[1]];
        let shifted = [th[0] + std::f64::consts::PI, th[1] + std::f64::consts::PI];
        d.rhs(&neg, &shifted, &mut g);
        for i in 0..2 {
            assert!((f[i] + g[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn schedule_ends_at_target() {
        let target = DuffingParams::default();
        let schedule = standard_schedule(&target);
        assert_eq!(schedule.stages().len(), 2);
        let last = &schedule.stages()[1];
        assert_eq!(last["alpha"], target.alpha);
        assert_eq!(last["f1"], target.f1);
        assert_eq!(last["f2"], target.f2);
        let weak = &schedule.stages()[0];
        assert_eq!(weak["alpha"], 1.0);
        assert_eq!(weak["f1"], 0.02);
        assert_eq!(weak["f2"], 0.015);
    }

    #[test]
    fn rejects_undamped() {
        let mut p = DuffingParams::default();
        p.delta = 0.0;
        assert!(Duffing::new(p).is_err());
    }

    #[test]
    fn unknown_override_rejected() {
        let mut set = ParamSet::new();
        set.insert("gamma".into(), 1.0);
        assert!(DuffingParams::default().with_overrides(&set).is_err());
    }
}
