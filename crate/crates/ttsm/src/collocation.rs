//! Assembly of the collocation residual and Jacobian on the tensor grid.
//!
//! At every node the residual balances the lifted angular derivative against
//! the forcing, `r = Σ_j ω_j 𝒟_j q̂ − f(q̂, θ)`. When the problem declares an
//! anchor, the anchored rows are replaced by `q̂ − prescribed`, which keeps the
//! system square and removes the nullspace of neutrally stable dynamics.

use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::error::TtsmError;
use crate::field::TorusField;
use crate::grid::AngularGrid;
use crate::problem::{Anchor, TorusProblem};
use crate::spectral::{dft_coefficients, lift_operator, LiftedOperator, OperatorMode, DENSE_CAP};

/// The discrete invariance system for one problem on one grid.
pub struct ResidualSystem {
    problem: Arc<dyn TorusProblem>,
    grid: AngularGrid,
    ops: Vec<LiftedOperator>,
    anchor: Option<Anchor>,
}

impl ResidualSystem {
    /// Builds the system; the problem's anchor, if any, is active.
    pub fn new(problem: Arc<dyn TorusProblem>, grid: AngularGrid) -> Result<Self, TtsmError> {
        let anchor = problem.anchor();
        Self::with_anchor(problem, grid, anchor)
    }

    /// Builds the system with the anchor rows left untouched regardless of
    /// what the problem declares. Used by diagnostics probing rank deficiency.
    pub fn new_unanchored(
        problem: Arc<dyn TorusProblem>,
        grid: AngularGrid,
    ) -> Result<Self, TtsmError> {
        Self::with_anchor(problem, grid, None)
    }

    fn with_anchor(
        problem: Arc<dyn TorusProblem>,
        grid: AngularGrid,
        anchor: Option<Anchor>,
    ) -> Result<Self, TtsmError> {
        let n = problem.state_dim();
        let ops = (0..grid.num_axes())
            .map(|axis| lift_operator(&grid, axis, n, OperatorMode::MatrixFree))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(a) = &anchor {
            if a.node.len() != grid.num_axes() {
                return Err(TtsmError::DimensionMismatch {
                    context: "anchor node multi-index",
                    expected: grid.num_axes(),
                    actual: a.node.len(),
                });
            }
            if a.components.len() != a.values.len()
                || a.components.iter().any(|&c| c >= n)
                || a.node.iter().zip(grid.counts()).any(|(&l, &c)| l >= c)
            {
                return Err(TtsmError::InvalidConfig(
                    "anchor components/node out of range".into(),
                ));
            }
        }
        Ok(Self {
            problem,
            grid,
            ops,
            anchor,
        })
    }

    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    pub fn problem(&self) -> &Arc<dyn TorusProblem> {
        &self.problem
    }

    pub fn state_dim(&self) -> usize {
        self.problem.state_dim()
    }

    /// Total number of unknowns `N = n · ∏_j counts[j]`.
    pub fn dim(&self) -> usize {
        self.grid.state_len(self.problem.state_dim())
    }

    pub fn anchor_applied(&self) -> bool {
        self.anchor.is_some()
    }

    fn anchor_rows(&self) -> Vec<(usize, f64)> {
        let n = self.problem.state_dim();
        match &self.anchor {
            Some(a) => {
                let base = self.grid.flat_node(&a.node) * n;
                a.components
                    .iter()
                    .zip(&a.values)
                    .map(|(&c, &v)| (base + c, v))
                    .collect()
            }
            None => Vec::new(),
        }
    }

    /// Assembles `r(q̂) = Σ_j ω_j 𝒟_j q̂ − f(q̂, θ)` with anchor rows replaced.
    pub fn residual(&self, field: &TorusField) -> Result<Array1<f64>, TtsmError> {
        let dim = self.dim();
        if field.values().len() != dim || field.state_dim() != self.problem.state_dim() {
            return Err(TtsmError::DimensionMismatch {
                context: "residual field",
                expected: dim,
                actual: field.values().len(),
            });
        }
        let q = field.as_slice();
        let mut r = vec![0.0; dim];
        for (op, &w) in self.ops.iter().zip(self.grid.frequencies()) {
            op.apply_scaled_add(w, q, &mut r);
        }

        let n = self.problem.state_dim();
        let k = self.grid.num_axes();
        let mut multi = vec![0usize; k];
        let mut phases = vec![0.0; k];
        let mut f = vec![0.0; n];
        for flat in 0..self.grid.total_nodes() {
            self.grid.multi_node(flat, &mut multi);
            self.grid.angles_of(&multi, &mut phases);
            self.problem.rhs(&q[flat * n..(flat + 1) * n], &phases, &mut f);
            for c in 0..n {
                r[flat * n + c] -= f[c];
            }
        }

        for (row, value) in self.anchor_rows() {
            r[row] = q[row] - value;
        }
        Ok(Array1::from(r))
    }

    /// Block-diagonal state Jacobians of `f` at every node, row-major per node.
    fn block_jacobians(&self, field: &TorusField) -> Vec<f64> {
        let n = self.problem.state_dim();
        let k = self.grid.num_axes();
        let total = self.grid.total_nodes();
        let q = field.as_slice();
        let mut blocks = vec![0.0; total * n * n];
        let mut multi = vec![0usize; k];
        let mut phases = vec![0.0; k];
        for flat in 0..total {
            self.grid.multi_node(flat, &mut multi);
            self.grid.angles_of(&multi, &mut phases);
            self.problem.rhs_jacobian(
                &q[flat * n..(flat + 1) * n],
                &phases,
                &mut blocks[flat * n * n..(flat + 1) * n * n],
            );
        }
        blocks
    }

    /// Assembles the dense Jacobian `J = Σ_j ω_j 𝒟_j − blkdiag(∂f/∂q)` with
    /// anchored rows replaced by unit rows.
    pub fn jacobian_dense(&self, field: &TorusField) -> Result<Array2<f64>, TtsmError> {
        let dim = self.dim();
        if dim > DENSE_CAP {
            return Err(TtsmError::DenseTooLarge {
                dim,
                cap: DENSE_CAP,
            });
        }
        if field.values().len() != dim {
            return Err(TtsmError::DimensionMismatch {
                context: "jacobian field",
                expected: dim,
                actual: field.values().len(),
            });
        }
        let mut jac = Array2::zeros((dim, dim));
        for (op, &w) in self.ops.iter().zip(self.grid.frequencies()) {
            op.add_scaled_to_dense(w, &mut jac);
        }
        let n = self.problem.state_dim();
        let blocks = self.block_jacobians(field);
        for flat in 0..self.grid.total_nodes() {
            for i in 0..n {
                for j in 0..n {
                    jac[[flat * n + i, flat * n + j]] -= blocks[flat * n * n + i * n + j];
                }
            }
        }
        for (row, _) in self.anchor_rows() {
            for col in 0..dim {
                jac[[row, col]] = 0.0;
            }
            jac[[row, row]] = 1.0;
        }
        Ok(jac)
    }

    /// Matrix-free Jacobian linearized at `field`.
    pub fn jacobian_operator(&self, field: &TorusField) -> Result<JacobianOperator<'_>, TtsmError> {
        if field.values().len() != self.dim() {
            return Err(TtsmError::DimensionMismatch {
                context: "jacobian field",
                expected: self.dim(),
                actual: field.values().len(),
            });
        }
        Ok(JacobianOperator {
            sys: self,
            blocks: self.block_jacobians(field),
        })
    }
}

/// `J v` evaluated by strides: lifted derivative sweeps plus one block-diagonal
/// product, with anchor rows overwritten by `v` itself.
pub struct JacobianOperator<'a> {
    sys: &'a ResidualSystem,
    blocks: Vec<f64>,
}

impl JacobianOperator<'_> {
    pub fn dim(&self) -> usize {
        self.sys.dim()
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.sys.dim());
        out.iter_mut().for_each(|o| *o = 0.0);
        for (op, &w) in self.sys.ops.iter().zip(self.sys.grid.frequencies()) {
            op.apply_scaled_add(w, v, out);
        }
        let n = self.sys.problem.state_dim();
        for flat in 0..self.sys.grid.total_nodes() {
            let block = &self.blocks[flat * n * n..(flat + 1) * n * n];
            let vi = &v[flat * n..(flat + 1) * n];
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += block[i * n + j] * vi[j];
                }
                out[flat * n + i] -= acc;
            }
        }
        for (row, _) in self.sys.anchor_rows() {
            out[row] = v[row];
        }
    }
}

/// Residual of a fine-grid solution's interpolant sampled on a coarse grid:
/// the computable surrogate for the nodal truncation error. Decays at the
/// spectral rate with the coarse grid size for analytic solutions.
pub fn truncation_error_probe(
    problem: Arc<dyn TorusProblem>,
    coarse_grid: &AngularGrid,
    fine_field: &TorusField,
) -> Result<f64, TtsmError> {
    if !coarse_grid.same_frequencies(fine_field.grid()) {
        return Err(TtsmError::FrequencyMismatch);
    }
    let coarse = dft_coefficients(fine_field).sample_on(coarse_grid);
    let sys = ResidualSystem::new(problem, coarse_grid.clone())?;
    let r = sys.residual(&coarse)?;
    Ok(r.iter().fold(0.0, |a: f64, &x| a.max(x.abs())))
}
