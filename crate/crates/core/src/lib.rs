//! Sparse approximate inverses for triangular matrices built from the
//! truncated Jacobi series, and the machinery needed to use them as ILU
//! preconditioners.
//!
//! The crate is organised bottom-up:
//!
//! * [`sparse`]: CSR storage, SpMV, SpGEMM, dropping and substitution kernels.
//! * [`ilu`]: level-of-fill incomplete LU factorization, ILU(k).
//! * [`sait`]: construction of the approximate inverses (threshold and
//!   pattern dropping) and the Jacobi-sweep applicator.
//! * [`krylov`]: preconditioned conjugate gradients and LOBPCG over a common
//!   preconditioner type.
//! * [`problems`]: the 3D finite-difference Laplacian, Matrix Market I/O and
//!   right-hand-side generation.
//!
//! A typical pipeline:
//!
//! ```
//! use sait_core::{ilu, krylov, problems, sait};
//!
//! let a = problems::laplacian_3d(6).unwrap();
//! let factors = ilu::ilu_k(&a, 0).unwrap();
//! let params = sait::SaitThrParams::new(0.05, 10).unwrap();
//! let (ml, mu) = sait::sait_thr_pair(&factors, params).unwrap();
//! let precond = krylov::PrecondOp::sait_pair(ml, mu, &factors);
//! let b = problems::make_rhs(&a, problems::RhsMode::OnesSolution);
//! let (x, stats) = krylov::pcg(&a, &b, &precond, 1e-10, 500).unwrap();
//! assert!(stats.converged);
//! assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-8));
//! ```

pub mod ilu;
pub mod krylov;
pub mod problems;
pub mod sait;
pub mod sparse;

pub use ilu::{ilu_k, IluFactors};
pub use krylov::{EigResult, PrecondOp, SolveStats};
pub use sparse::{CsrMatrix, SparsityPattern, Triangle, TriangularKind};
