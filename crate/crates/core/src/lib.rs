//! Matrix square root and inverse square root of SPD matrices via Taylor and
//! Padé polynomials, Newton–Schulz iterations and an eigendecomposition
//! reference, with Lyapunov-based gradients and benchmarking utilities.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backward;
pub mod bench;
pub mod coeffs;
pub mod diffcheck;
pub mod error;
pub mod forward;
pub mod matcore;

pub use backward::{bartels_stewart, kron_solve, lyapunov_grad, ns_backward, reference_grad, BackwardConfig, GradRequest, GradResult};
pub use coeffs::{pade_table, taylor_table, PadeTable, TaylorTable, Target};
pub use error::{Error, Result};
pub use forward::{forward, mpa, mtp, ns_coupled, ns_onevar, spectral, ForwardConfig, ForwardResult, Method};
pub use matcore::{frobenius_norm, matmul, Matrix, MatrixBatch, OpCounters, SymMatrix};
