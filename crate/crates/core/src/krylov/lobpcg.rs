//! Block LOBPCG for the smallest eigenpairs of an SPD matrix.
//!
//! Each iteration performs Rayleigh–Ritz on `[X, W, P]`, where `X` holds the
//! current Ritz vectors, `W` the preconditioned residuals of the pairs that
//! have not converged yet, and `P` the implicit conjugate directions. `W` and
//! `P` are projected against `X` and orthonormalized before the projection, so
//! the Rayleigh–Ritz step is a standard symmetric eigenproblem.
//!
//! Converged pairs are soft-locked: they stay in `X` but contribute no new
//! search directions.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::block::{orthonormalize, orthonormalize_against, sorted_eigen, spmm};
use super::{PrecondOp, SolverError};
use crate::sparse::{CsrMatrix, SparseError};

/// Scaled Gram eigenvalues below this are treated as linear dependence.
const DROP_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct EigResult {
    /// Ritz values, ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal Ritz vectors, one per column.
    pub eigenvectors: DMatrix<f64>,
    /// `‖A x_i - λ_i x_i‖` for every pair, one entry per iteration.
    pub residual_history: Vec<Vec<f64>>,
    /// Ritz values per iteration.
    pub eigenvalue_history: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

impl EigResult {
    /// Residual-norm history of pair `i`.
    pub fn pair_history(&self, i: usize) -> Vec<f64> {
        self.residual_history.iter().map(|r| r[i]).collect()
    }
}

fn residual_block(ax: &DMatrix<f64>, x: &DMatrix<f64>, lambda: &[f64]) -> DMatrix<f64> {
    let mut r = ax.clone();
    for (j, &l) in lambda.iter().enumerate() {
        let mut col = r.column_mut(j);
        col.axpy(-l, &x.column(j), 1.0);
    }
    r
}

fn select_columns(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

/// Rayleigh–Ritz on the orthonormal basis `[x, y]`. Returns the new Ritz
/// values, the new `X`, and the conjugate directions `Y C_y`.
fn rayleigh_ritz(
    a: &CsrMatrix,
    x: &DMatrix<f64>,
    ax: &DMatrix<f64>,
    y: &DMatrix<f64>,
    nev: usize,
) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>), SparseError> {
    let k = x.ncols();
    let q = DMatrix::from_fn(x.nrows(), k + y.ncols(), |i, j| {
        if j < k {
            x[(i, j)]
        } else {
            y[(i, j - k)]
        }
    });
    let ay = spmm(a, y)?;
    let aq = DMatrix::from_fn(x.nrows(), k + y.ncols(), |i, j| {
        if j < k {
            ax[(i, j)]
        } else {
            ay[(i, j - k)]
        }
    });
    let h = q.transpose() * aq;
    let (vals, vecs) = sorted_eigen(&h);
    let c = vecs.columns(0, nev).into_owned();
    let x_new = &q * &c;
    let c_y = c.rows(k, y.ncols()).into_owned();
    let p_new = y * c_y;
    Ok((vals[..nev].to_vec(), x_new, p_new))
}

/// Computes the `nev` smallest eigenpairs of the SPD matrix `a`.
///
/// A pair counts as converged when `‖A x - λ x‖ <= tol` with `‖x‖ = 1`. The
/// initial block is pseudo-random from `seed`. If `maxit` is reached the
/// current Ritz pairs are returned with `converged = false`.
pub fn lobpcg(
    a: &CsrMatrix,
    precond: &PrecondOp,
    nev: usize,
    tol: f64,
    maxit: usize,
    seed: u64,
) -> Result<EigResult, SolverError> {
    if !a.is_square() {
        return Err(SparseError::NotSquare {
            op: "lobpcg",
            nrows: a.nrows(),
            ncols: a.ncols(),
        }
        .into());
    }
    let n = a.nrows();
    if nev == 0 || nev > n {
        return Err(SolverError::InvalidInput(format!(
            "nev must lie in 1..={n}, got {nev}"
        )));
    }
    if let Some(d) = precond.dim() {
        if d != n {
            return Err(SparseError::DimensionMismatch {
                op: "lobpcg preconditioner",
                expected: n,
                found: d,
            }
            .into());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = DMatrix::from_fn(n, nev, |_, _| rng.gen_range(-1.0..1.0));
    let (mut x, _) = orthonormalize(&x0, DROP_TOL)
        .filter(|(q, _)| q.ncols() == nev)
        .ok_or_else(|| SolverError::Breakdown {
            iteration: 0,
            reason: "initial block is rank deficient".into(),
        })?;
    let mut ax = spmm(a, &x)?;
    let (lambda0, c) = sorted_eigen(&(x.transpose() * &ax));
    x = &x * &c;
    ax = &ax * &c;
    let mut lambda = lambda0;

    let mut p: Option<DMatrix<f64>> = None;
    let mut residual_history = Vec::new();
    let mut eigenvalue_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    loop {
        let r = residual_block(&ax, &x, &lambda);
        let norms: Vec<f64> = (0..nev).map(|j| r.column(j).norm()).collect();
        residual_history.push(norms.clone());
        eigenvalue_history.push(lambda.clone());

        let active: Vec<usize> = (0..nev).filter(|&j| !(norms[j] <= tol)).collect();
        if active.is_empty() {
            converged = true;
            break;
        }
        if iterations == maxit {
            break;
        }
        iterations += 1;

        let w = precond.apply_block(&select_columns(&r, &active))?;
        let mut step = None;
        for with_p in [true, false] {
            let y = match (&p, with_p) {
                (Some(p), true) if p.ncols() > 0 => {
                    let mut y = DMatrix::zeros(n, w.ncols() + p.ncols());
                    y.columns_mut(0, w.ncols()).copy_from(&w);
                    y.columns_mut(w.ncols(), p.ncols()).copy_from(p);
                    y
                }
                (_, true) => continue,
                _ => w.clone(),
            };
            let Some(y) = orthonormalize_against(&x, &y, DROP_TOL) else {
                continue;
            };
            let (vals, x_new, p_new) = rayleigh_ritz(a, &x, &ax, &y, nev)?;
            if vals.iter().all(|v| v.is_finite()) {
                step = Some((vals, x_new, p_new));
                break;
            }
        }
        let Some((vals, x_new, p_new)) = step else {
            return Err(SolverError::Breakdown {
                iteration: iterations,
                reason: "search basis collapsed after restart".into(),
            });
        };

        // re-orthonormalize X every iteration; A X is recomputed from scratch
        let (x_orth, _) = orthonormalize(&x_new, DROP_TOL)
            .filter(|(q, _)| q.ncols() == nev)
            .ok_or_else(|| SolverError::Breakdown {
                iteration: iterations,
                reason: "Ritz block lost rank".into(),
            })?;
        let ax_orth = spmm(a, &x_orth)?;
        let (lambda_new, c) = sorted_eigen(&(x_orth.transpose() * &ax_orth));
        debug_assert!(lambda_new.len() == vals.len());
        x = &x_orth * &c;
        ax = &ax_orth * &c;
        lambda = lambda_new;

        p = Some(select_columns(&p_new, &active));
    }

    Ok(EigResult {
        eigenvalues: lambda,
        eigenvectors: x,
        residual_history,
        eigenvalue_history,
        iterations,
        converged,
    })
}
