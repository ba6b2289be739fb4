//! Restarted GMRES with modified Gram-Schmidt and Givens rotations.

/// Restart length, relative tolerance on `‖Ax−b‖₂/‖b‖₂`, and the maximum
/// number of restart cycles.
#[derive(Debug, Clone)]
pub struct GmresConfig {
    pub restart: usize,
    pub rel_tol: f64,
    pub max_outer: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            restart: 50,
            rel_tol: 1e-10,
            max_outer: 40,
        }
    }
}

/// Result of a GMRES run. Hitting `max_outer` is reported, not fatal.
#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub outer_iters: usize,
    pub total_iters: usize,
    pub rel_residual: f64,
    pub converged: bool,
    pub breakdown: bool,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `A x = b` for a matrix-free linear map, starting from `x = 0`.
pub fn gmres_solve<F>(apply: F, b: &[f64], config: &GmresConfig) -> GmresOutcome
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return GmresOutcome {
            x: vec![0.0; n],
            outer_iters: 0,
            total_iters: 0,
            rel_residual: 0.0,
            converged: true,
            breakdown: false,
        };
    }

    let m = config.restart.max(1).min(n);
    let mut x = vec![0.0; n];
    let mut ax = vec![0.0; n];
    let mut breakdown = false;
    let mut total_iters = 0usize;
    let mut rel = f64::INFINITY;

    for outer in 1..=config.max_outer.max(1) {
        apply(&x, &mut ax);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        rel = beta / bnorm;
        if rel <= config.rel_tol {
            return GmresOutcome {
                x,
                outer_iters: outer - 1,
                total_iters,
                rel_residual: rel,
                converged: true,
                breakdown,
            };
        }

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;

        let mut cols = 0usize;
        for k in 0..m {
            total_iters += 1;
            let mut w = vec![0.0; n];
            apply(&basis[k], &mut w);
            for (j, vj) in basis.iter().enumerate() {
                let hjk: f64 = w.iter().zip(vj).map(|(a, b)| a * b).sum();
                h[j][k] = hjk;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hjk * vi;
                }
            }
            let hk1 = norm2(&w);
            h[k + 1][k] = hk1;

            // previous Givens rotations
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = cs[k] * h[k][k] + sn[k] * h[k + 1][k];
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            cols = k + 1;

            let arnoldi_break = hk1 == 0.0;
            if arnoldi_break {
                breakdown = true;
            } else {
                basis.push(w.iter().map(|v| v / hk1).collect());
            }
            if g[k + 1].abs() / bnorm <= config.rel_tol || arnoldi_break {
                break;
            }
        }

        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; cols];
        for i in (0..cols).rev() {
            let mut acc = g[i];
            for j in i + 1..cols {
                acc -= h[i][j] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { acc / h[i][i] } else { 0.0 };
        }
        for (j, &yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }

        apply(&x, &mut ax);
        let rnew: f64 = norm2(
            &b.iter()
                .zip(&ax)
                .map(|(bi, ai)| bi - ai)
                .collect::<Vec<_>>(),
        );
        rel = rnew / bnorm;
        if rel <= config.rel_tol || breakdown {
            return GmresOutcome {
                x,
                outer_iters: outer,
                total_iters,
                rel_residual: rel,
                converged: rel <= config.rel_tol,
                breakdown,
            };
        }
    }

    GmresOutcome {
        x,
        outer_iters: config.max_outer,
        total_iters,
        rel_residual: rel,
        converged: false,
        breakdown,
    }
}
