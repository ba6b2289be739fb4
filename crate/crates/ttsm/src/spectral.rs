//! Fourier spectral differentiation and its Kronecker lifting to the k-torus.
//!
//! The one-dimensional operator acts on samples at `n` equispaced angles
//! (`n` odd) and differentiates the unique trigonometric interpolant of
//! degree `K = (n−1)/2` exactly. Lifting tensors that operator into the
//! stacked layout of [`AngularGrid`]: the operator for axis `j` is
//! `(I ⊗ … ⊗ D_j ⊗ … ⊗ I) ⊗ I_n`, with axis 0 the fastest index and the
//! state dimension innermost.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::TtsmError;
use crate::field::TorusField;
use crate::grid::AngularGrid;

/// Largest stacked dimension for which operators may be materialized dense.
pub const DENSE_CAP: usize = 20_000;

/// Dense Fourier spectral differentiation matrix on one angle.
#[derive(Debug, Clone)]
pub struct DiffMatrix {
    size: usize,
    entries: Array2<f64>,
}

impl DiffMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    /// Applies the matrix to nodal samples of one angle.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let n = self.size;
        let mut out = vec![0.0; n];
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += self.entries[[j, k]] * values[k];
            }
            out[j] = acc;
        }
        out
    }
}

/// Builds the odd-count spectral differentiation matrix:
/// `D[j,k] = (−1)^{j−k}/2 · csc((j−k)π/n)` off the diagonal, zero on it.
///
/// Even counts are rejected; this is the odd-count form of the operator and
/// even grids would silently need the cot-form variant.
pub fn spectral_diff_matrix(size: usize) -> Result<DiffMatrix, TtsmError> {
    if size == 0 || size % 2 == 0 {
        return Err(TtsmError::EvenGrid {
            axis: 0,
            count: size,
        });
    }
    let n = size as i64;
    let mut entries = Array2::zeros((size, size));
    for j in 0..size {
        for k in 0..size {
            if j == k {
                continue;
            }
            let d = j as i64 - k as i64;
            let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let angle = d as f64 * std::f64::consts::PI / n as f64;
            entries[[j, k]] = sign * 0.5 / angle.sin();
        }
    }
    Ok(DiffMatrix { size, entries })
}

/// Whether a lifted operator keeps a dense matrix or applies itself by strides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorMode {
    Dense,
    MatrixFree,
}

/// The spectral differentiation operator of one axis, lifted to the stacked
/// grid of dimension `N = state_dim · ∏_j counts[j]`.
#[derive(Debug, Clone)]
pub struct LiftedOperator {
    axis: usize,
    grid: AngularGrid,
    state_dim: usize,
    diff: DiffMatrix,
    dense: Option<Array2<f64>>,
}

/// Lifts the axis-`axis` differentiation matrix to the full stacked grid.
pub fn lift_operator(
    grid: &AngularGrid,
    axis: usize,
    state_dim: usize,
    mode: OperatorMode,
) -> Result<LiftedOperator, TtsmError> {
    if axis >= grid.num_axes() {
        return Err(TtsmError::AxisOutOfRange {
            axis,
            num_axes: grid.num_axes(),
        });
    }
    if state_dim == 0 {
        return Err(TtsmError::InvalidGrid("state_dim must be >= 1".into()));
    }
    let diff = spectral_diff_matrix(grid.counts()[axis])?;
    let mut op = LiftedOperator {
        axis,
        grid: grid.clone(),
        state_dim,
        diff,
        dense: None,
    };
    if mode == OperatorMode::Dense {
        op.dense = Some(op.materialize()?);
    }
    Ok(op)
}

impl LiftedOperator {
    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn dim(&self) -> usize {
        self.grid.state_len(self.state_dim)
    }

    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    pub fn diff_matrix(&self) -> &DiffMatrix {
        &self.diff
    }

    pub fn dense(&self) -> Option<&Array2<f64>> {
        self.dense.as_ref()
    }

    /// Builds the dense `N×N` matrix `(I ⊗ … ⊗ D ⊗ … ⊗ I) ⊗ I_n`.
    pub fn materialize(&self) -> Result<Array2<f64>, TtsmError> {
        let dim = self.dim();
        if dim > DENSE_CAP {
            return Err(TtsmError::DenseTooLarge {
                dim,
                cap: DENSE_CAP,
            });
        }
        let mut out = Array2::zeros((dim, dim));
        self.add_scaled_to_dense(1.0, &mut out);
        Ok(out)
    }

    /// Accumulates `coeff · 𝒟` into a dense matrix without forming Kronecker
    /// factors, walking the sparsity pattern directly.
    pub(crate) fn add_scaled_to_dense(&self, coeff: f64, out: &mut Array2<f64>) {
        let n = self.state_dim;
        let nj = self.grid.counts()[self.axis];
        let stride = self.grid.axis_stride(self.axis) * n;
        let block = nj * stride;
        let dim = self.dim();
        let d = &self.diff.entries;
        for outer in 0..dim / block {
            for inner in 0..stride {
                let base = outer * block + inner;
                for l in 0..nj {
                    for p in 0..nj {
                        if l != p {
                            out[[base + l * stride, base + p * stride]] += coeff * d[[l, p]];
                        }
                    }
                }
            }
        }
    }

    /// `out += coeff · 𝒟 v`, matrix-free.
    pub fn apply_scaled_add(&self, coeff: f64, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        let n = self.state_dim;
        let nj = self.grid.counts()[self.axis];
        let stride = self.grid.axis_stride(self.axis) * n;
        let block = nj * stride;
        let d = &self.diff.entries;
        for outer in 0..v.len() / block {
            for inner in 0..stride {
                let base = outer * block + inner;
                for l in 0..nj {
                    let mut acc = 0.0;
                    for p in 0..nj {
                        acc += d[[l, p]] * v[base + p * stride];
                    }
                    out[base + l * stride] += coeff * acc;
                }
            }
        }
    }

    /// `out = 𝒟 v`, using the dense matrix when materialized.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        if let Some(dense) = &self.dense {
            let x = Array1::from_iter(v.iter().copied());
            let y = dense.dot(&x);
            out.copy_from_slice(y.as_slice().unwrap());
        } else {
            out.iter_mut().for_each(|o| *o = 0.0);
            self.apply_scaled_add(1.0, v, out);
        }
    }
}

/// Complex Fourier coefficients of a nodal field, indexed by wave numbers
/// `|m_j| ≤ K_j`, in the forward convention `c_m = (1/∏n_j) Σ q e^{−i m·θ}` so
/// that synthesis `Σ c_m e^{i m·θ}` reproduces the nodal values.
#[derive(Debug, Clone)]
pub struct TorusCoefficients {
    grid: AngularGrid,
    state_dim: usize,
    // Same canonical layout as the field; axis index `i` holds wave number
    // `m = i − K_j`.
    coeffs: Vec<Complex64>,
}

/// Computes the tensor-product discrete Fourier coefficients of a field.
pub fn dft_coefficients(field: &TorusField) -> TorusCoefficients {
    let grid = field.grid();
    let n = field.state_dim();
    let mut work: Vec<Complex64> = field
        .values()
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();

    for axis in 0..grid.num_axes() {
        let nj = grid.counts()[axis];
        let kj = (nj - 1) / 2;
        let stride = grid.axis_stride(axis) * n;
        let block = nj * stride;
        // Twiddle table e^{-i m θ_l}, rows m+K, cols l.
        let mut twiddle = vec![Complex64::new(0.0, 0.0); nj * nj];
        for mi in 0..nj {
            let m = mi as f64 - kj as f64;
            for (l, &theta) in grid.axis_nodes(axis).iter().enumerate() {
                twiddle[mi * nj + l] = Complex64::from_polar(1.0, -m * theta);
            }
        }
        let scale = 1.0 / nj as f64;
        let mut line = vec![Complex64::new(0.0, 0.0); nj];
        for outer in 0..work.len() / block {
            for inner in 0..stride {
                let base = outer * block + inner;
                for (l, slot) in line.iter_mut().enumerate() {
                    *slot = work[base + l * stride];
                }
                for mi in 0..nj {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (l, &x) in line.iter().enumerate() {
                        acc += twiddle[mi * nj + l] * x;
                    }
                    work[base + mi * stride] = acc * scale;
                }
            }
        }
    }

    TorusCoefficients {
        grid: grid.clone(),
        state_dim: n,
        coeffs: work,
    }
}

impl TorusCoefficients {
    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Coefficient of wave vector `m` (entries in `−K_j..=K_j`) for one component.
    pub fn get(&self, wave: &[i64], comp: usize) -> Complex64 {
        let counts = self.grid.counts();
        let mut idx = 0usize;
        for ax in (0..counts.len()).rev() {
            let kj = ((counts[ax] - 1) / 2) as i64;
            debug_assert!(wave[ax].abs() <= kj);
            idx = idx * counts[ax] + (wave[ax] + kj) as usize;
        }
        self.coeffs[idx * self.state_dim + comp]
    }

    /// Evaluates the interpolant at arbitrary phases. The synthesis sums the
    /// full symmetric wave-number box, so the imaginary parts of a real field
    /// cancel; the real part is returned.
    pub fn evaluate(&self, phases: &[f64], out: &mut [f64]) {
        debug_assert_eq!(phases.len(), self.grid.num_axes());
        debug_assert_eq!(out.len(), self.state_dim);
        let counts = self.grid.counts();
        let total = self.grid.total_nodes();

        // Per-axis harmonics e^{i m θ}, then the tensor phase per mode.
        let mut axis_tables: Vec<Vec<Complex64>> = Vec::with_capacity(counts.len());
        for (ax, &nj) in counts.iter().enumerate() {
            let kj = ((nj - 1) / 2) as i64;
            let base = Complex64::from_polar(1.0, phases[ax]);
            let mut table = vec![Complex64::new(0.0, 0.0); nj];
            let mut cur = Complex64::from_polar(1.0, -(kj as f64) * phases[ax]);
            for slot in table.iter_mut() {
                *slot = cur;
                cur *= base;
            }
            axis_tables.push(table);
        }

        let mut acc = vec![Complex64::new(0.0, 0.0); self.state_dim];
        let mut multi = vec![0usize; counts.len()];
        for flat in 0..total {
            let mut rem = flat;
            let mut phase = Complex64::new(1.0, 0.0);
            for (ax, &c) in counts.iter().enumerate() {
                multi[ax] = rem % c;
                rem /= c;
                phase *= axis_tables[ax][multi[ax]];
            }
            let off = flat * self.state_dim;
            for (c, slot) in acc.iter_mut().enumerate() {
                *slot += phase * self.coeffs[off + c];
            }
        }
        for (o, a) in out.iter_mut().zip(&acc) {
            *o = a.re;
        }
    }

    /// Re-samples the interpolant on the nodes of another grid with the same
    /// frequencies (or on the own grid, reproducing the field).
    pub fn sample_on(&self, grid: &AngularGrid) -> TorusField {
        let n = self.state_dim;
        let mut field = TorusField::zeros(grid.clone(), n);
        let k = grid.num_axes();
        let mut multi = vec![0usize; k];
        let mut phases = vec![0.0; k];
        let mut state = vec![0.0; n];
        for flat in 0..grid.total_nodes() {
            grid.multi_node(flat, &mut multi);
            grid.angles_of(&multi, &mut phases);
            self.evaluate(&phases, &mut state);
            field.values_mut()[flat * n..(flat + 1) * n].copy_from_slice(&state);
        }
        field
    }
}

/// Evaluates the trigonometric interpolant of a field at one phase point.
///
/// For repeated evaluations build [`dft_coefficients`] once and call
/// [`TorusCoefficients::evaluate`].
pub fn trig_interpolate(field: &TorusField, phases: &[f64]) -> Vec<f64> {
    let coeffs = dft_coefficients(field);
    let mut out = vec![0.0; field.state_dim()];
    coeffs.evaluate(phases, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TorusField;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(freqs: &[f64], counts: &[usize]) -> AngularGrid {
        AngularGrid::new(freqs, counts).unwrap()
    }

    #[test]
    fn size_one_is_zero() {
        let d = spectral_diff_matrix(1).unwrap();
        assert_eq!(d.entries().shape(), &[1, 1]);
        assert_eq!(d.entries()[[0, 0]], 0.0);
    }

    #[test]
    fn size_three_first_row() {
        let d = spectral_diff_matrix(3).unwrap();
        let inv_sqrt3 = 1.0 / 3f64.sqrt();
        assert!((d.entries()[[0, 0]]).abs() == 0.0);
        assert!((d.entries()[[0, 1]] - inv_sqrt3).abs() < 1e-15);
        assert!((d.entries()[[0, 2]] + inv_sqrt3).abs() < 1e-15);
        // circulant: row j is row 0 rotated by j
        for j in 0..3 {
            for k in 0..3 {
                let shifted = d.entries()[[0, (k + 3 - j) % 3]];
                assert!((d.entries()[[j, k]] - shifted).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn size_three_differentiates_sine() {
        let d = spectral_diff_matrix(3).unwrap();
        let nodes: Vec<f64> = (0..3).map(|l| 2.0 * PI * l as f64 / 3.0).collect();
        let sin: Vec<f64> = nodes.iter().map(|t| t.sin()).collect();
        let got = d.apply(&sin);
        for (g, t) in got.iter().zip(&nodes) {
            assert!((g - t.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn even_size_rejected() {
        let err = spectral_diff_matrix(4).unwrap_err();
        assert!(err.to_string().contains("even grid unsupported"));
        assert!(spectral_diff_matrix(0).is_err());
    }

    proptest! {
        #[test]
        fn diff_matrix_structure(half in 0usize..32) {
            let size = 2 * half + 1;
            let d = spectral_diff_matrix(size).unwrap();
            for j in 0..size {
                prop_assert_eq!(d.entries()[[j, j]], 0.0);
                let row_sum: f64 = (0..size).map(|k| d.entries()[[j, k]]).sum();
                prop_assert!(row_sum.abs() < 1e-12);
                for k in 0..size {
                    prop_assert!((d.entries()[[j, k]] + d.entries()[[k, j]]).abs() < 1e-15);
                }
            }
        }

        #[test]
        fn diff_matrix_exact_on_resolved_modes(half in 0usize..32) {
            let size = 2 * half + 1;
            let kmax = (size - 1) / 2;
            let d = spectral_diff_matrix(size).unwrap();
            let nodes: Vec<f64> = (0..size).map(|l| 2.0 * PI * l as f64 / size as f64).collect();
            for m in 1..=kmax {
                let mf = m as f64;
                let sin: Vec<f64> = nodes.iter().map(|t| (mf * t).sin()).collect();
                let got = d.apply(&sin);
                for (g, t) in got.iter().zip(&nodes) {
                    prop_assert!((g - mf * (mf * t).cos()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn lift_single_tone() {
        // field = sin θ_0 on a 3x3 two-torus: axis 0 derivative is cos θ_0,
        // axis 1 derivative vanishes.
        let g = grid(&[1.0, 2f64.sqrt()], &[3, 3]);
        let field = TorusField::from_fn(g.clone(), 1, |th, out| out[0] = th[0].sin());
        let op0 = lift_operator(&g, 0, 1, OperatorMode::MatrixFree).unwrap();
        let op1 = lift_operator(&g, 1, 1, OperatorMode::MatrixFree).unwrap();
        let mut d0 = vec![0.0; 9];
        let mut d1 = vec![0.0; 9];
        op0.apply(field.values().as_slice().unwrap(), &mut d0);
        op1.apply(field.values().as_slice().unwrap(), &mut d1);
        let expect = TorusField::from_fn(g, 1, |th, out| out[0] = th[0].cos());
        for i in 0..9 {
            assert!((d0[i] - expect.values()[i]).abs() < 1e-13);
            assert!(d1[i].abs() < 1e-13);
        }
    }

    #[test]
    fn lift_dimension_arithmetic() {
        let g = grid(&[1.0, 2.0], &[5, 3]);
        let op = lift_operator(&g, 0, 2, OperatorMode::MatrixFree).unwrap();
        assert_eq!(op.dim(), 30);
        assert!(lift_operator(&g, 2, 1, OperatorMode::MatrixFree).is_err());
    }

    #[test]
    fn lift_three_torus_tone() {
        let g = grid(&[1.0, 2f64.sqrt(), 3f64.sqrt()], &[3, 3, 3]);
        let field = TorusField::from_fn(g.clone(), 1, |th, out| out[0] = th[2].sin());
        let op2 = lift_operator(&g, 2, 1, OperatorMode::MatrixFree).unwrap();
        let mut d2 = vec![0.0; 27];
        op2.apply(field.values().as_slice().unwrap(), &mut d2);
        let expect = TorusField::from_fn(g, 1, |th, out| out[0] = th[2].cos());
        for i in 0..27 {
            assert!((d2[i] - expect.values()[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn dense_and_matrix_free_agree_and_commute() {
        let g = grid(&[1.0, 2f64.sqrt()], &[5, 3]);
        let n = 2;
        let dim = g.state_len(n);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let ops: Vec<_> = (0..2)
            .map(|ax| lift_operator(&g, ax, n, OperatorMode::MatrixFree).unwrap())
            .collect();
        for op in &ops {
            let dense = op.materialize().unwrap();
            let mut free = vec![0.0; dim];
            op.apply(&v, &mut free);
            let vv = Array1::from(v.clone());
            let dv = dense.dot(&vv);
            let scale = free.iter().fold(0f64, |a, x| a.max(x.abs())).max(1e-30);
            for i in 0..dim {
                assert!((free[i] - dv[i]).abs() / scale < 1e-13);
            }
        }

        // commutativity across axes
        let mut d0v = vec![0.0; dim];
        ops[0].apply(&v, &mut d0v);
        let mut d1d0 = vec![0.0; dim];
        ops[1].apply(&d0v, &mut d1d0);
        let mut d1v = vec![0.0; dim];
        ops[1].apply(&v, &mut d1v);
        let mut d0d1 = vec![0.0; dim];
        ops[0].apply(&d1v, &mut d0d1);
        let scale = d1d0.iter().fold(0f64, |a, x| a.max(x.abs())).max(1e-30);
        for i in 0..dim {
            assert!((d1d0[i] - d0d1[i]).abs() / scale < 1e-12);
        }
    }

    #[test]
    fn materialized_operator_equals_explicit_kronecker_product() {
        // independent construction: fold I_{n2} (x) D_j (x) I_{n1} ... (x) I_n
        // with ndarray's kron, highest axis leftmost
        let g = grid(&[1.0, 2f64.sqrt()], &[5, 3]);
        let n = 2;
        for axis in 0..2 {
            let op = lift_operator(&g, axis, n, OperatorMode::MatrixFree).unwrap();
            let got = op.materialize().unwrap();
            let mut want = Array2::<f64>::eye(1);
            for ax in (0..2).rev() {
                let factor = if ax == axis {
                    spectral_diff_matrix(g.counts()[ax]).unwrap().entries().clone()
                } else {
                    Array2::<f64>::eye(g.counts()[ax])
                };
                want = ndarray::linalg::kron(&want, &factor);
            }
            want = ndarray::linalg::kron(&want, &Array2::<f64>::eye(n));
            let diff = (&got - &want).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(diff < 1e-15, "axis {axis}: kron mismatch {diff}");
        }
    }

    #[test]
    fn dense_cap_enforced() {
        let g = grid(&[1.0, 2.0], &[201, 101]);
        let op = lift_operator(&g, 0, 1, OperatorMode::MatrixFree).unwrap();
        assert!(matches!(
            op.materialize(),
            Err(TtsmError::DenseTooLarge { .. })
        ));
    }

    #[test]
    fn dft_constant_field() {
        let g = grid(&[1.0, 2.0], &[3, 3]);
        let field = TorusField::from_fn(g, 1, |_, out| out[0] = 2.5);
        let c = dft_coefficients(&field);
        assert!((c.get(&[0, 0], 0) - Complex64::new(2.5, 0.0)).norm() < 1e-14);
        for m0 in -1i64..=1 {
            for m1 in -1i64..=1 {
                if (m0, m1) != (0, 0) {
                    assert!(c.get(&[m0, m1], 0).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn dft_cosine_tone() {
        let g = grid(&[1.0, 2.0], &[5, 5]);
        let field = TorusField::from_fn(g, 1, |th, out| out[0] = th[1].cos());
        let c = dft_coefficients(&field);
        assert!((c.get(&[0, 1], 0) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((c.get(&[0, -1], 0) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!(c.get(&[1, 0], 0).norm() < 1e-15);
        assert!(c.get(&[2, 2], 0).norm() < 1e-15);
    }

    #[test]
    fn dft_round_trip_random() {
        let g = grid(&[1.0, 2f64.sqrt()], &[5, 5]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let field = TorusField::from_fn(g.clone(), 2, |_, out| {
            out[0] = rng.gen_range(-1.0..1.0);
            out[1] = rng.gen_range(-1.0..1.0);
        });
        let back = dft_coefficients(&field).sample_on(&g);
        let err = field.max_abs_diff(&back).unwrap();
        assert!(err < 1e-13, "round trip error {err}");
    }

    #[test]
    fn interpolation_reproduces_nodes_and_resolved_modes() {
        let g = grid(&[1.0, 2.0], &[3, 3]);
        let field = TorusField::from_fn(g.clone(), 1, |th, out| out[0] = th[0].cos());
        // node reproduction
        let v = trig_interpolate(&field, &[2.0 * PI / 3.0, 4.0 * PI / 3.0]);
        assert!((v[0] - field.value(&[1, 2], 0)).abs() < 1e-14);
        // resolved-mode exactness off the grid
        let v = trig_interpolate(&field, &[PI / 5.0, 1.0]);
        assert!((v[0] - (PI / 5.0).cos()).abs() < 1e-14);
    }

    #[test]
    fn two_tone_field_has_two_modes() {
        let g = grid(&[1.0, 2.0], &[5, 5]);
        let field = TorusField::from_fn(g, 1, |th, out| out[0] = th[0].sin() + th[1].cos());
        let c = dft_coefficients(&field);
        for m0 in -2i64..=2 {
            for m1 in -2i64..=2 {
                let v = c.get(&[m0, m1], 0).norm();
                let expected = matches!((m0, m1), (1 | -1, 0) | (0, 1 | -1));
                if expected {
                    assert!((v - 0.5).abs() < 1e-14);
                } else {
                    assert!(v < 1e-14);
                }
            }
        }
    }
}
