use std::time::Instant;

use super::{dot, norm2, PrecondOp, SolverError};
use crate::sparse::{self, CsrMatrix, SparseError};

/// Per-run record of a PCG solve.
///
/// `precond_apply_secs` and `other_secs` split the wall time into the
/// preconditioner applications and everything else, so that
/// `total ≈ iterations * (comp + othercomp)` with the per-iteration means
/// returned by [`SolveStats::comp_per_iter`] and [`SolveStats::other_per_iter`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// `‖r_k‖ / ‖b‖` for `k = 0..=iterations`.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// `‖b - A x‖ / ‖b‖` of the returned iterate.
    pub final_true_residual: f64,
    pub precond_nnz_ratio: Option<f64>,
    pub precond_apply_secs: f64,
    pub other_secs: f64,
    pub total_secs: f64,
}

impl SolveStats {
    pub fn comp_per_iter(&self) -> f64 {
        self.precond_apply_secs / self.iterations.max(1) as f64
    }

    pub fn other_per_iter(&self) -> f64 {
        self.other_secs / self.iterations.max(1) as f64
    }

    /// `iterations * (comp + othercomp)`.
    pub fn modeled_runtime(&self) -> f64 {
        self.iterations as f64 * (self.comp_per_iter() + self.other_per_iter())
    }
}

fn true_residual(a: &CsrMatrix, b: &[f64], x: &[f64]) -> Result<Vec<f64>, SparseError> {
    let ax = sparse::spmv(a, x)?;
    Ok(b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect())
}

/// Preconditioned conjugate gradients from a zero initial guess.
///
/// Stops when the recurrence residual satisfies `‖r‖/‖b‖ <= tol` and the true
/// residual `‖b - A x‖/‖b‖` confirms it. If the confirmation fails, the
/// recurrence residual is replaced by the true one and the iteration restarts
/// from the current iterate. When `maxit` is reached the iterate with the
/// smallest recurrence residual is returned with `converged = false`.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    precond: &PrecondOp,
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveStats), SolverError> {
    let start = Instant::now();
    if !a.is_square() {
        return Err(SparseError::NotSquare {
            op: "pcg",
            nrows: a.nrows(),
            ncols: a.ncols(),
        }
        .into());
    }
    let n = a.nrows();
    if b.len() != n {
        return Err(SparseError::DimensionMismatch {
            op: "pcg",
            expected: n,
            found: b.len(),
        }
        .into());
    }
    if let Some(d) = precond.dim() {
        if d != n {
            return Err(SparseError::DimensionMismatch {
                op: "pcg preconditioner",
                expected: n,
                found: d,
            }
            .into());
        }
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::InvalidInput("right-hand side is not finite".into()));
    }

    let mut precond_secs = 0.0;
    let mut apply = |r: &[f64]| -> Result<Vec<f64>, SparseError> {
        let t = Instant::now();
        let z = precond.apply(r);
        precond_secs += t.elapsed().as_secs_f64();
        z
    };

    let mut x = vec![0.0; n];
    let b_norm = norm2(b);
    let mut history = vec![1.0];
    if b_norm == 0.0 {
        let total = start.elapsed().as_secs_f64();
        return Ok((
            x,
            SolveStats {
                iterations: 0,
                residual_history: history,
                converged: true,
                final_true_residual: 0.0,
                precond_nnz_ratio: precond.nnz_ratio(),
                precond_apply_secs: 0.0,
                other_secs: total,
                total_secs: total,
            },
        ));
    }

    let mut r = b.to_vec();
    let mut z = apply(&r)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];

    let mut best = (1.0, x.clone());
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=maxit {
        sparse::spmv_into(a, &p, &mut q)?;
        let curvature = dot(&p, &q);
        if !(curvature > 0.0) {
            return Err(SolverError::Indefinite {
                iteration: it,
                curvature,
            });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        iterations = it;
        let mut rel = norm2(&r) / b_norm;

        let mut restart = false;
        if rel <= tol {
            let rt = true_residual(a, b, &x)?;
            let true_rel = norm2(&rt) / b_norm;
            if true_rel <= tol {
                history.push(rel);
                converged = true;
                break;
            }
            r = rt;
            rel = true_rel;
            restart = true;
        }
        history.push(rel);
        if rel < best.0 {
            best = (rel, x.clone());
        }
        if !rel.is_finite() {
            return Err(SolverError::Breakdown {
                iteration: it,
                reason: "residual is not finite".into(),
            });
        }

        z = apply(&r)?;
        let rz_next = dot(&r, &z);
        if rz_next == 0.0 || !rz_next.is_finite() {
            return Err(SolverError::Breakdown {
                iteration: it,
                reason: format!("r'z = {rz_next:e}"),
            });
        }
        if restart {
            p.copy_from_slice(&z);
        } else {
            let beta = rz_next / rz;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        rz = rz_next;
    }

    if !converged && best.0 < *history.last().unwrap() {
        x = best.1;
    }
    let final_true_residual = norm2(&true_residual(a, b, &x)?) / b_norm;
    let total = start.elapsed().as_secs_f64();
    Ok((
        x,
        SolveStats {
            iterations,
            residual_history: history,
            converged,
            final_true_residual,
            precond_nnz_ratio: precond.nnz_ratio(),
            precond_apply_secs: precond_secs,
            other_secs: (total - precond_secs).max(0.0),
            total_secs: total,
        },
    ))
}
