//! Preconditioned Krylov solvers: PCG for linear systems and LOBPCG for the
//! smallest eigenpairs of an SPD matrix.
//!
//! Both solvers take a [`PrecondOp`], which is either nothing, the exact ILU
//! solve (two substitutions), a pair of approximate inverses (two products),
//! or a fixed number of Jacobi sweeps on each factor.

mod block;
mod lobpcg;
mod pcg;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::ilu::IluFactors;
use crate::sait::{jacobi_split, JacobiSplit};
use crate::sparse::{self, CsrMatrix, SparseError};

pub use block::spmm;
pub use lobpcg::{lobpcg, EigResult};
pub use pcg::{pcg, SolveStats};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error("matrix is not positive definite: p'Ap = {curvature:e} at iteration {iteration}")]
    Indefinite { iteration: usize, curvature: f64 },
    #[error("breakdown at iteration {iteration}: {reason}")]
    Breakdown { iteration: usize, reason: String },
    #[error("invalid solver input: {0}")]
    InvalidInput(String),
}

/// Preconditioner application `z = P(r)`.
#[derive(Debug, Clone)]
pub enum PrecondOp {
    Identity,
    /// `z = U^{-1} L^{-1} r` by forward and backward substitution.
    ExactIlu(IluFactors),
    /// `z = M_U (M_L r)`. `source_nnz` is `nnz(L) + nnz(U)` of the factors the
    /// pair approximates.
    SaitPair {
        ml: CsrMatrix,
        mu: CsrMatrix,
        source_nnz: usize,
    },
    /// `sweeps` Jacobi sweeps on `L y = r`, then on `U z = y`.
    JacobiSweeps {
        l: JacobiSplit,
        u: JacobiSplit,
        sweeps: usize,
    },
}

impl PrecondOp {
    pub fn exact_ilu(factors: IluFactors) -> Self {
        PrecondOp::ExactIlu(factors)
    }

    pub fn sait_pair(ml: CsrMatrix, mu: CsrMatrix, factors: &IluFactors) -> Self {
        PrecondOp::SaitPair {
            ml,
            mu,
            source_nnz: factors.nnz(),
        }
    }

    pub fn jacobi_sweeps(factors: &IluFactors, sweeps: usize) -> Result<Self, SolverError> {
        if sweeps == 0 {
            return Err(SolverError::InvalidInput("jacobi sweep count must be at least 1".into()));
        }
        Ok(PrecondOp::JacobiSweeps {
            l: jacobi_split(&factors.l, IluFactors::L_KIND)?,
            u: jacobi_split(&factors.u, IluFactors::U_KIND)?,
            sweeps,
        })
    }

    /// Short name used in reports.
    pub fn label(&self) -> &'static str {
        match self {
            PrecondOp::Identity => "none",
            PrecondOp::ExactIlu(_) => "exact",
            PrecondOp::SaitPair { .. } => "sait",
            PrecondOp::JacobiSweeps { .. } => "jacobi",
        }
    }

    /// Storage of the applied operators relative to the ILU factors they stand
    /// for. `None` for the identity.
    pub fn nnz_ratio(&self) -> Option<f64> {
        match self {
            PrecondOp::Identity => None,
            PrecondOp::ExactIlu(_) | PrecondOp::JacobiSweeps { .. } => Some(1.0),
            PrecondOp::SaitPair { ml, mu, source_nnz } => {
                Some((ml.nnz() + mu.nnz()) as f64 / *source_nnz as f64)
            }
        }
    }

    /// Dimension the operator acts on, if fixed.
    pub fn dim(&self) -> Option<usize> {
        match self {
            PrecondOp::Identity => None,
            PrecondOp::ExactIlu(f) => Some(f.nrows()),
            PrecondOp::SaitPair { ml, .. } => Some(ml.nrows()),
            PrecondOp::JacobiSweeps { l, .. } => Some(l.n()),
        }
    }

    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>, SparseError> {
        match self {
            PrecondOp::Identity => Ok(r.to_vec()),
            PrecondOp::ExactIlu(f) => f.solve(r),
            PrecondOp::SaitPair { ml, mu, .. } => sparse::spmv(mu, &sparse::spmv(ml, r)?),
            PrecondOp::JacobiSweeps { l, u, sweeps } => u.sweeps(&l.sweeps(r, *sweeps)?, *sweeps),
        }
    }

    /// Applies the preconditioner to every column of a dense block. The
    /// approximate-inverse pair does this as two sparse-times-block products.
    pub fn apply_block(&self, r: &DMatrix<f64>) -> Result<DMatrix<f64>, SparseError> {
        match self {
            PrecondOp::Identity => Ok(r.clone()),
            PrecondOp::SaitPair { ml, mu, .. } => spmm(mu, &spmm(ml, r)?),
            _ => {
                let n = r.nrows();
                let mut out = DMatrix::zeros(n, r.ncols());
                if n == 0 {
                    return Ok(out);
                }
                for (src, dst) in r.as_slice().chunks(n).zip(out.as_mut_slice().chunks_mut(n)) {
                    dst.copy_from_slice(&self.apply(src)?);
                }
                Ok(out)
            }
        }
    }
}

/// Free-function form of [`PrecondOp::apply`].
pub fn apply_precond(p: &PrecondOp, r: &[f64]) -> Result<Vec<f64>, SparseError> {
    p.apply(r)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
