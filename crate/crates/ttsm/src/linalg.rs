//! Dense linear-algebra backend.
//!
//! With the `lapack` feature (default) factorizations go through LAPACK via
//! `ndarray-linalg`; without it a partial-pivoting LU written here is used,
//! which keeps the crate buildable on targets like wasm32 where no BLAS is
//! available. Desk-scale systems are small enough for either path.

use ndarray::{Array1, Array2};

use crate::error::TtsmError;

/// OpenBLAS's threaded kernels recurse with large frames and overflow Rust's
/// 2 MiB default thread stacks, so LAPACK entry points run on a scoped thread
/// with this much room.
#[cfg(feature = "lapack")]
const LAPACK_STACK: usize = 64 * 1024 * 1024;

#[cfg(feature = "lapack")]
fn on_wide_stack<T, F>(f: F) -> T
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    std::thread::scope(|scope| {
        std::thread::Builder::new()
            .stack_size(LAPACK_STACK)
            .spawn_scoped(scope, f)
            .expect("spawn lapack thread")
            .join()
            .expect("lapack thread panicked")
    })
}

/// Solves `A x = b`, consuming `A`. Returns [`TtsmError::SingularJacobian`]
/// when the factorization breaks down.
pub fn solve_dense(a: Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>, TtsmError> {
    debug_assert_eq!(a.nrows(), a.ncols());
    debug_assert_eq!(a.nrows(), b.len());
    #[cfg(feature = "lapack")]
    {
        use ndarray_linalg::{FactorizeInto, ReciprocalConditionNum, Solve};
        on_wide_stack(move || {
            let lu = a
                .factorize_into()
                .map_err(|_| TtsmError::SingularJacobian)?;
            // an exactly singular system can still factorize with roundoff
            // pivots and "solve" consistently; the condition estimate is the
            // reliable rank-loss signal
            let rcond = lu.rcond().map_err(|_| TtsmError::SingularJacobian)?;
            if !(rcond > 1e-13) {
                return Err(TtsmError::SingularJacobian);
            }
            lu.solve(b).map_err(|_| TtsmError::SingularJacobian)
        })
    }
    #[cfg(not(feature = "lapack"))]
    {
        lu_solve_fallback(a, b)
    }
}

/// Singular values of a dense matrix, descending: the conditioning diagnostic
/// for collocation Jacobians (rank loss shows up as a vanishing tail value).
#[cfg(feature = "lapack")]
pub fn singular_values(a: &Array2<f64>) -> Result<Vec<f64>, TtsmError> {
    use ndarray_linalg::SVDInto;
    let a = a.clone();
    on_wide_stack(move || {
        let (_, s, _) = a
            .svd_into(false, false)
            .map_err(|_| TtsmError::SingularJacobian)?;
        Ok(s.to_vec())
    })
}

/// Plain partial-pivoting LU solve. Always compiled so it can be tested
/// against the LAPACK path.
#[cfg_attr(feature = "lapack", allow(dead_code))]
pub(crate) fn lu_solve_fallback(
    mut a: Array2<f64>,
    b: &Array1<f64>,
) -> Result<Array1<f64>, TtsmError> {
    let n = a.nrows();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut x = b.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[[perm[col], col]].abs();
        for row in col + 1..n {
            let v = a[[perm[row], col]].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best < 1e-13 * scale || !best.is_finite() {
            return Err(TtsmError::SingularJacobian);
        }
        perm.swap(col, pivot);
        let p = perm[col];
        let diag = a[[p, col]];
        for row in col + 1..n {
            let r = perm[row];
            let factor = a[[r, col]] / diag;
            if factor != 0.0 {
                a[[r, col]] = factor;
                for k in col + 1..n {
                    a[[r, k]] -= factor * a[[p, k]];
                }
            }
        }
    }
    // forward substitution on permuted rows
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let mut acc = x[perm[i]];
        for k in 0..i {
            acc -= a[[perm[i], k]] * y[k];
        }
        y[i] = acc;
    }
    // back substitution
    for i in (0..n).rev() {
        let mut acc = y[i];
        for k in i + 1..n {
            acc -= a[[perm[i], k]] * x[k];
        }
        x[i] = acc / a[[perm[i], i]];
    }
    Ok(x)
}
