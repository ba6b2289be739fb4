//! The tensor-product collocation grid on the k-torus.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::TtsmError;

/// Equispaced angular collocation grid over `[0, 2π)^k`.
///
/// Axis `j` carries `counts[j]` nodes `θ_j^(ℓ) = 2πℓ/counts[j]` and advances at
/// the angular rate `frequencies[j]`. Counts must be odd: the differentiation
/// matrix used throughout is the odd-count form.
///
/// The canonical stacked layout places axis 0 fastest among the angles and the
/// state components innermost: the value of component `c` at node `(ℓ_0, …,
/// ℓ_{k-1})` lives at `(ℓ_0 + counts[0]·(ℓ_1 + counts[1]·(…)))·n + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularGrid {
    frequencies: Vec<f64>,
    counts: Vec<usize>,
    nodes: Vec<Vec<f64>>,
}

impl AngularGrid {
    /// Builds a grid from per-axis frequencies and odd node counts.
    pub fn new(frequencies: &[f64], counts: &[usize]) -> Result<Self, TtsmError> {
        if frequencies.is_empty() {
            return Err(TtsmError::InvalidGrid("at least one axis required".into()));
        }
        if frequencies.len() != counts.len() {
            return Err(TtsmError::InvalidGrid(format!(
                "{} frequencies but {} grid counts",
                frequencies.len(),
                counts.len()
            )));
        }
        for (axis, &w) in frequencies.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(TtsmError::InvalidGrid(format!(
                    "frequency {w} on axis {axis} must be positive and finite"
                )));
            }
        }
        for (axis, &c) in counts.iter().enumerate() {
            if c == 0 || c % 2 == 0 {
                return Err(TtsmError::EvenGrid { axis, count: c });
            }
        }
        let nodes = counts
            .iter()
            .map(|&c| (0..c).map(|l| 2.0 * PI * l as f64 / c as f64).collect())
            .collect();
        Ok(Self {
            frequencies: frequencies.to_vec(),
            counts: counts.to_vec(),
            nodes,
        })
    }

    pub fn num_axes(&self) -> usize {
        self.counts.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Node angles along one axis, strictly increasing in `[0, 2π)`.
    pub fn axis_nodes(&self, axis: usize) -> &[f64] {
        &self.nodes[axis]
    }

    /// Total number of collocation nodes, `∏_j counts[j]`.
    pub fn total_nodes(&self) -> usize {
        self.counts.iter().product()
    }

    /// Length of a stacked state vector with `state_dim` components per node.
    pub fn state_len(&self, state_dim: usize) -> usize {
        self.total_nodes() * state_dim
    }

    /// Per-axis wave-number bound `K_j = (counts[j] − 1)/2` resolved by the grid.
    pub fn wave_limits(&self) -> Vec<usize> {
        self.counts.iter().map(|&c| (c - 1) / 2).collect()
    }

    /// Flat node index of a multi-index, axis 0 fastest.
    pub fn flat_node(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.counts.len());
        let mut idx = 0;
        for ax in (0..self.counts.len()).rev() {
            debug_assert!(multi[ax] < self.counts[ax]);
            idx = idx * self.counts[ax] + multi[ax];
        }
        idx
    }

    /// Inverse of [`flat_node`](Self::flat_node); writes the multi-index into `out`.
    pub fn multi_node(&self, mut flat: usize, out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.counts.len());
        for (ax, &c) in self.counts.iter().enumerate() {
            out[ax] = flat % c;
            flat /= c;
        }
        debug_assert_eq!(flat, 0);
    }

    /// Angles of the node with the given multi-index.
    pub fn angles_of(&self, multi: &[usize], out: &mut [f64]) {
        for (ax, &l) in multi.iter().enumerate() {
            out[ax] = self.nodes[ax][l];
        }
    }

    /// Node stride of an axis in the canonical layout (in nodes, not state entries).
    pub fn axis_stride(&self, axis: usize) -> usize {
        self.counts[..axis].iter().product()
    }

    /// True when both grids share the same frequencies to within roundoff.
    pub fn same_frequencies(&self, other: &AngularGrid) -> bool {
        self.frequencies.len() == other.frequencies.len()
            && self
                .frequencies
                .iter()
                .zip(&other.frequencies)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0))
    }
}
