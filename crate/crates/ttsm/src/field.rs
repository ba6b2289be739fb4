//! The stacked nodal state vector over a torus grid.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::TtsmError;
use crate::grid::AngularGrid;

/// Nodal values of an `n`-dimensional state over all collocation nodes, in
/// the canonical layout (axis 0 fastest among angles, components innermost).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusField {
    grid: AngularGrid,
    state_dim: usize,
    values: Array1<f64>,
}

impl TorusField {
    pub fn zeros(grid: AngularGrid, state_dim: usize) -> Self {
        let len = grid.state_len(state_dim);
        Self {
            grid,
            state_dim,
            values: Array1::zeros(len),
        }
    }

    pub fn from_values(
        grid: AngularGrid,
        state_dim: usize,
        values: Array1<f64>,
    ) -> Result<Self, TtsmError> {
        if values.len() != grid.state_len(state_dim) {
            return Err(TtsmError::DimensionMismatch {
                context: "TorusField::from_values",
                expected: grid.state_len(state_dim),
                actual: values.len(),
            });
        }
        Ok(Self {
            grid,
            state_dim,
            values,
        })
    }

    /// Samples a continuous function `f(phases, out_state)` at every node.
    pub fn from_fn<F>(grid: AngularGrid, state_dim: usize, mut f: F) -> Self
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let k = grid.num_axes();
        let total = grid.total_nodes();
        let mut values = Array1::zeros(total * state_dim);
        let mut multi = vec![0usize; k];
        let mut phases = vec![0.0; k];
        let slice = values.as_slice_mut().unwrap();
        for flat in 0..total {
            grid.multi_node(flat, &mut multi);
            grid.angles_of(&multi, &mut phases);
            f(&phases, &mut slice[flat * state_dim..(flat + 1) * state_dim]);
        }
        Self {
            grid,
            state_dim,
            values,
        }
    }

    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        self.values.as_slice_mut().unwrap()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice().unwrap()
    }

    /// Value of one component at a node multi-index.
    pub fn value(&self, multi: &[usize], comp: usize) -> f64 {
        self.values[self.grid.flat_node(multi) * self.state_dim + comp]
    }

    /// State vector at a flat node index.
    pub fn node_state(&self, flat: usize) -> &[f64] {
        &self.as_slice()[flat * self.state_dim..(flat + 1) * self.state_dim]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a: f64, &x| a.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &TorusField) -> Result<f64, TtsmError> {
        if self.values.len() != other.values.len() {
            return Err(TtsmError::DimensionMismatch {
                context: "TorusField::max_abs_diff",
                expected: self.values.len(),
                actual: other.values.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .fold(0.0, |a: f64, (x, y)| a.max((x - y).abs())))
    }

    /// Re-orders the values into the alternate component-major layout
    /// (component outermost, nodes in canonical order within each component).
    pub fn to_component_major(&self) -> Array1<f64> {
        let n = self.state_dim;
        let total = self.grid.total_nodes();
        let mut out = Array1::zeros(n * total);
        for flat in 0..total {
            for c in 0..n {
                out[c * total + flat] = self.values[flat * n + c];
            }
        }
        out
    }

    /// Inverse of [`to_component_major`](Self::to_component_major).
    pub fn from_component_major(
        grid: AngularGrid,
        state_dim: usize,
        values: &Array1<f64>,
    ) -> Result<Self, TtsmError> {
        if values.len() != grid.state_len(state_dim) {
            return Err(TtsmError::DimensionMismatch {
                context: "TorusField::from_component_major",
                expected: grid.state_len(state_dim),
                actual: values.len(),
            });
        }
        let total = grid.total_nodes();
        let mut out = Array1::zeros(values.len());
        for flat in 0..total {
            for c in 0..state_dim {
                out[flat * state_dim + c] = values[c * total + flat];
            }
        }
        Self::from_values(grid, state_dim, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::trig_interpolate;
    use proptest::prelude::*;

    fn grid33() -> AngularGrid {
        AngularGrid::new(&[1.0, 2f64.sqrt()], &[3, 3]).unwrap()
    }

    #[test]
    fn constant_sampling() {
        let f = TorusField::from_fn(grid33(), 1, |_, out| out[0] = 4.25);
        assert_eq!(f.values().len(), 9);
        assert!(f.values().iter().all(|&v| v == 4.25));
    }

    #[test]
    fn sample_then_interpolate_is_identity_at_nodes() {
        let g = AngularGrid::new(&[1.0, 2.0], &[5, 3]).unwrap();
        let f = TorusField::from_fn(g.clone(), 2, |th, out| {
            out[0] = th[0].sin() + 0.3 * th[1].cos();
            out[1] = (2.0 * th[0]).cos() * th[1].sin();
        });
        let mut multi = vec![0usize; 2];
        let mut phases = vec![0.0; 2];
        for flat in (0..g.total_nodes()).step_by(4) {
            g.multi_node(flat, &mut multi);
            g.angles_of(&multi, &mut phases);
            let v = trig_interpolate(&f, &phases);
            for c in 0..2 {
                assert!((v[c] - f.node_state(flat)[c]).abs() < 1e-13);
            }
        }
    }

    proptest! {
        #[test]
        fn layout_round_trip(seed in 0u64..1000) {
            let g = AngularGrid::new(&[1.0, 2.0], &[3, 5]).unwrap();
            let n = 3;
            let mut state = seed;
            let mut next = move || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let f = TorusField::from_fn(g.clone(), n, |_, out| out.iter_mut().for_each(|o| *o = next()));
            let alt = f.to_component_major();
            let back = TorusField::from_component_major(g, n, &alt).unwrap();
            prop_assert_eq!(f, back);
        }
    }
}
