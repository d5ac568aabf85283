//! Restarted GMRES for matrix-free operators.

use crate::error::{Error, Result};

pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

pub trait Preconditioner: Sync {
    /// `y = M^{-1} x`
    fn apply_inv(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    pub restart: usize,
    pub max_iters: usize,
    /// Relative tolerance on the (preconditioned) residual norm.
    pub tol: f64,
}

impl GmresConfig {
    /// Restart length 200, and at least ten restart cycles per 200 unknowns.
    pub fn for_size(n: usize, tol: f64) -> Self {
        let cycles = 10 * n.div_ceil(200).max(1);
        Self {
            restart: 200,
            max_iters: 200 * cycles,
            tol,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual after each iteration (first entry: initial guess).
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve `A x = b` from the zero initial guess.
pub fn gmres(
    op: &dyn LinearOperator,
    precond: Option<&dyn Preconditioner>,
    b: &[f64],
    cfg: &GmresConfig,
) -> Result<GmresOutcome> {
    let n = op.dim();
    if b.len() != n {
        return Err(Error::Dimension(format!(
            "gmres rhs length {} vs operator {n}",
            b.len()
        )));
    }
    let mut x = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut work = vec![0.0; n];

    let apply_prec = |src: &[f64], dst: &mut [f64]| match precond {
        Some(m) => m.apply_inv(src, dst),
        None => dst.copy_from_slice(src),
    };

    apply_prec(b, &mut tmp);
    let bnorm = norm(&tmp);
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            x,
            iterations: 0,
            history: vec![0.0],
        });
    }

    let mut history = vec![1.0];
    let mut iterations = 0;
    let m = cfg.restart.max(1);
    loop {
        // r = M^{-1} (b - A x)
        op.apply(&x, &mut work);
        for i in 0..n {
            work[i] = b[i] - work[i];
        }
        let mut r = vec![0.0; n];
        apply_prec(&work, &mut r);
        let beta = norm(&r);
        if beta / bnorm <= cfg.tol {
            return Ok(GmresOutcome { x, iterations, history });
        }
        if iterations >= cfg.max_iters {
            return Err(Error::SolverFailure {
                iterations,
                residual: beta / bnorm,
                history,
            });
        }

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        r.iter_mut().for_each(|v| *v /= beta);
        basis.push(r);
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..m {
            iterations += 1;
            op.apply(&basis[k], &mut work);
            let mut w = vec![0.0; n];
            apply_prec(&work, &mut w);
            for (j, vj) in basis.iter().enumerate() {
                let hjk = dot(&w, vj);
                h[j][k] = hjk;
                w.iter_mut().zip(vj).for_each(|(wi, vi)| *wi -= hjk * vi);
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
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
            k_used = k + 1;
            let rel = g[k + 1].abs() / bnorm;
            history.push(rel);
            if rel <= cfg.tol || hn == 0.0 || iterations >= cfg.max_iters {
                break;
            }
            w.iter_mut().for_each(|v| *v /= hn);
            basis.push(w);
        }

        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut().zip(&basis[j]).for_each(|(xi, vj)| *xi += yj * vj);
        }
    }
}

/// Dense matrix wrapper, mostly for tests and small oracles.
pub struct DenseOperator<'a>(pub &'a nalgebra::DMatrix<f64>);

impl LinearOperator for DenseOperator<'_> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = self.0;
        y.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..m.ncols() {
            let xc = x[c];
            if xc != 0.0 {
                for r in 0..m.nrows() {
                    y[r] += m[(r, c)] * xc;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn solves_small_nonsymmetric_system() {
        let a = DMatrix::from_fn(30, 30, |i, j| {
            if i == j {
                4.0
            } else {
                ((i * 7 + j * 3) % 5) as f64 * 0.1 - 0.2
            }
        });
        let xs: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let mut b = vec![0.0; 30];
        DenseOperator(&a).apply(&xs, &mut b);
        let out = gmres(&DenseOperator(&a), None, &b, &GmresConfig::for_size(30, 1e-13)).unwrap();
        for (u, v) in out.x.iter().zip(&xs) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn restart_still_converges() {
        let a = DMatrix::from_fn(40, 40, |i, j| {
            if i == j {
                2.0 + i as f64 * 0.05
            } else {
                0.01 * ((i + 2 * j) % 3) as f64
            }
        });
        let b: Vec<f64> = (0..40).map(|i| 1.0 + i as f64).collect();
        let cfg = GmresConfig {
            restart: 3,
            max_iters: 500,
            tol: 1e-12,
        };
        let out = gmres(&DenseOperator(&a), None, &b, &cfg).unwrap();
        let mut r = vec![0.0; 40];
        DenseOperator(&a).apply(&out.x, &mut r);
        let res: f64 = r.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!(res / norm(&b) < 1e-11);
    }

    #[test]
    fn zero_rhs_needs_no_iterations() {
        let a = DMatrix::<f64>::identity(5, 5);
        let out = gmres(&DenseOperator(&a), None, &[0.0; 5], &GmresConfig::for_size(5, 1e-4)).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reports_failure_with_history() {
        // rotation: GMRES(1) stagnates
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let cfg = GmresConfig {
            restart: 1,
            max_iters: 5,
            tol: 1e-10,
        };
        match gmres(&DenseOperator(&a), None, &[1.0, 0.0], &cfg) {
            Err(Error::SolverFailure { history, .. }) => assert!(!history.is_empty()),
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
