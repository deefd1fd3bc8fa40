//! Gradients of the matrix square root and inverse square root.
//!
//! For `Y = A^{1/2}` the input gradient `X = ∂l/∂A` solves the Lyapunov
//! equation `Y X + X Y = ∂l/∂Y`. [`lyapunov_grad`] solves it with the coupled
//! Newton–Schulz sign iteration, [`bartels_stewart`] exactly through the
//! eigendecomposition, and [`kron_solve`] by brute force on the vectorized
//! system. [`ns_backward`] is reverse mode through the coupled NS forward.

use crate::coeffs::Target;
use crate::error::{Error, Result};
use crate::forward::{ns_coupled_trace, spectral, DIVERGENCE_FACTOR};
use crate::matcore::{frobenius_norm, kron, matmul, solve_general, sym_eig, Matrix, OpCounters, SymMatrix};

/// Largest dimension accepted by [`kron_solve`].
pub const KRON_SOLVE_MAX_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackwardConfig {
    pub iterations: usize,
    /// Stop early once `‖B_k − I‖_F` drops below this.
    pub tolerance: Option<f64>,
}

impl Default for BackwardConfig {
    fn default() -> Self {
        Self {
            iterations: 8,
            tolerance: None,
        }
    }
}

impl BackwardConfig {
    pub fn with_iterations(iterations: usize) -> Self {
        Self {
            iterations,
            tolerance: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradRequest {
    pub target: Target,
    /// Original input.
    pub a: SymMatrix,
    /// `A^{1/2}` or `A^{-1/2}`, matching `target`.
    pub forward_value: SymMatrix,
    /// `∂l/∂A^{1/2}` or `∂l/∂A^{-1/2}`.
    pub upstream: Matrix,
    pub config: BackwardConfig,
}

#[derive(Debug, Clone)]
pub struct GradResult {
    /// `∂l/∂A`.
    pub grad: Matrix,
    /// Convergence diagnostic: `‖B_k − I‖_F` for the Lyapunov solver,
    /// `‖Y_T Z_T − I‖_F` for [`ns_backward`].
    pub residual_b: f64,
    pub iterations: usize,
    pub counters: OpCounters,
}

fn check_same_dims(op: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            op,
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    Ok(())
}

/// Iterative Lyapunov gradient solver.
///
/// Sqrt: `B₀ = A^{1/2}`, `C₀ = ∂l/∂A^{1/2}`. InvSqrt: `B₀ = A^{-1/2}`,
/// `C₀ = −(A^{-1/2})²·∂l/∂A^{-1/2}·(A^{-1/2})²` (3 matmuls). Both are divided by
/// `‖B₀‖_F`, then
///
/// ```text
/// B ← B(3I − B²)/2
/// C ← (−B²C + BCB + C(3I − B²))/2
/// ```
///
/// runs for `T` steps (6 matmuls each) or until `‖B − I‖_F < τ`; the gradient
/// is `C/2`.
pub fn lyapunov_grad(req: &GradRequest) -> Result<GradResult> {
    check_same_dims("lyapunov_grad", &req.a, &req.forward_value)?;
    check_same_dims("lyapunov_grad", &req.a, &req.upstream)?;
    let cfg = req.config;
    if cfg.iterations == 0 {
        return Err(Error::InvalidArgument("Lyapunov solver needs at least one iteration".into()));
    }
    if let Some(tol) = cfg.tolerance {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
        }
    }

    let mut ops = OpCounters::new();
    let b_raw = req.forward_value.as_matrix();
    let c_raw = match req.target {
        Target::Sqrt => req.upstream.clone(),
        Target::InvSqrt => {
            let b2 = matmul(b_raw, b_raw, &mut ops)?;
            let b2g = matmul(&b2, &req.upstream, &mut ops)?;
            matmul(&b2g, &b2, &mut ops)?.scale(-1.0)
        }
    };

    let nb = frobenius_norm(b_raw);
    if !(nb > 0.0) || !nb.is_finite() {
        return Err(Error::InvalidArgument(format!("forward value has norm {nb}")));
    }
    let mut b = b_raw.scale(1.0 / nb);
    let mut c = c_raw.scale(1.0 / nb);
    let n = b.rows();
    let eye = Matrix::identity(n);

    let mut done = 0;
    while done < cfg.iterations {
        if let Some(tol) = cfg.tolerance {
            if frobenius_norm(&b.sub(&eye)?) < tol {
                break;
            }
        }
        let b2 = matmul(&b, &b, &mut ops)?;
        let b2c = matmul(&b2, &c, &mut ops)?;
        let bc = matmul(&b, &c, &mut ops)?;
        let bcb = matmul(&bc, &b, &mut ops)?;
        let cb2 = matmul(&c, &b2, &mut ops)?;
        let bb2 = matmul(&b, &b2, &mut ops)?;
        // C(3I − B²) = 3C − CB²
        let mut c_next = bcb.sub(&b2c)?;
        c_next = c_next.axpby(1.0, &c, 3.0)?.axpby(0.5, &cb2, -0.5)?;
        let b_next = b.axpby(1.5, &bb2, -0.5)?;
        done += 1;
        let norm = frobenius_norm(&b_next);
        let limit = DIVERGENCE_FACTOR;
        if !norm.is_finite() || norm > limit || !c_next.is_finite() {
            return Err(Error::Diverged {
                step: done,
                norm,
                limit,
            });
        }
        b = b_next;
        c = c_next;
    }

    Ok(GradResult {
        grad: c.scale(0.5),
        residual_b: frobenius_norm(&b.sub(&eye)?),
        iterations: done,
        counters: ops,
    })
}

/// Exact solution of `bX + Xb = c` for SPD `b`:
/// `X = U·[(Uᵀ c U)_ij / (λ_i + λ_j)]·Uᵀ`.
pub fn bartels_stewart(b: &SymMatrix, c: &Matrix) -> Result<Matrix> {
    bartels_stewart_counted(b, c, &mut OpCounters::new())
}

pub fn bartels_stewart_counted(b: &SymMatrix, c: &Matrix, ops: &mut OpCounters) -> Result<Matrix> {
    check_same_dims("bartels_stewart", b, c)?;
    let d = sym_eig(b, ops)?;
    if d.eigenvalues[0] <= 0.0 {
        return Err(Error::NotPositiveDefinite(format!(
            "Lyapunov coefficient has eigenvalue {:e}",
            d.eigenvalues[0]
        )));
    }
    let u = &d.eigenvectors;
    let ut = u.transpose();
    let ct = matmul(&matmul(&ut, c, ops)?, u, ops)?;
    let lam = &d.eigenvalues;
    let xt = Matrix::from_fn(ct.rows(), ct.cols(), |i, j| ct[(i, j)] / (lam[i] + lam[j]));
    matmul(&matmul(u, &xt, ops)?, &ut, ops)
}

/// Exact input gradient for either target.
///
/// Sqrt: `S X + X S = G` with `S = A^{1/2}`. InvSqrt: `dY = −Y·dS·Y` for
/// `Y = A^{-1/2}`, so `S X + X S = −Y G Y`.
pub fn reference_grad(target: Target, a: &SymMatrix, upstream: &Matrix) -> Result<Matrix> {
    check_same_dims("reference_grad", a, upstream)?;
    let s = spectral(a, Target::Sqrt)?.value;
    let rhs = match target {
        Target::Sqrt => upstream.clone(),
        Target::InvSqrt => {
            let y = spectral(a, Target::InvSqrt)?.value;
            let mut ops = OpCounters::new();
            matmul(&matmul(&y, upstream, &mut ops)?, &y, &mut ops)?.scale(-1.0)
        }
    };
    bartels_stewart(&s, &rhs)
}

/// Brute-force Lyapunov solve through `(b ⊗ I + I ⊗ b)·vec(X) = vec(c)`.
///
/// `vec` stacks rows, matching the row-major storage, which for symmetric `b`
/// gives exactly this Kronecker sum. Limited to dim ≤ [`KRON_SOLVE_MAX_DIM`].
pub fn kron_solve(b: &SymMatrix, c: &Matrix) -> Result<Matrix> {
    check_same_dims("kron_solve", b, c)?;
    let n = b.dim();
    if n > KRON_SOLVE_MAX_DIM {
        return Err(Error::Oversize {
            what: "Kronecker Lyapunov system",
            dim: n,
            limit: KRON_SOLVE_MAX_DIM,
        });
    }
    let eye = Matrix::identity(n);
    let k = kron(b, &eye)?.add(&kron(&eye, b)?)?;
    let rhs = Matrix::from_vec(n * n, 1, c.as_slice().to_vec())?;
    let x = solve_general(&k, &rhs, &mut OpCounters::new())?;
    Matrix::from_vec(n, n, x.into_vec())
}

/// Reverse-mode gradient of the coupled NS square root `√‖A‖_F·Y_T` with
/// respect to `A`, including the paths through the pre-normalization and the
/// post-compensation.
///
/// The forward iterates are replayed and stored (not counted); `counters`
/// holds the backward work only: 6 matmuls per step, minus the two that would
/// multiply the zero cotangent of `Z_T` and the two that would produce the
/// unused cotangent of `Z₀` (`6T − 4` for `T ≥ 2`).
pub fn ns_backward(a: &SymMatrix, upstream: &Matrix, iterations: usize) -> Result<GradResult> {
    check_same_dims("ns_backward", a, upstream)?;
    let trace = ns_coupled_trace(a, iterations, true, &mut OpCounters::new())?;
    let mut ops = OpCounters::new();
    let s = trace.norm;
    let r = s.sqrt();

    let mut g_y = upstream.scale(r);
    let mut g_s = upstream.dot(&trace.y)? / (2.0 * r);
    let mut g_z: Option<Matrix> = None;

    for (k, step) in trace.steps.iter().enumerate().rev() {
        // Y_{k+1} = Y_k T_k
        let mut g_t = matmul(&step.y.transpose(), &g_y, &mut ops)?;
        let mut g_y_prev = matmul(&g_y, &step.t.transpose(), &mut ops)?;
        // Z_{k+1} = T_k Z_k
        let mut g_z_prev = None;
        if let Some(gz) = &g_z {
            g_t = g_t.add(&matmul(gz, &step.z.transpose(), &mut ops)?)?;
            if k > 0 {
                g_z_prev = Some(matmul(&step.t.transpose(), gz, &mut ops)?);
            }
        }
        // T_k = 1.5 I − 0.5 Z_k Y_k
        let g_m = g_t.scale(-0.5);
        g_y_prev = g_y_prev.add(&matmul(&step.z.transpose(), &g_m, &mut ops)?)?;
        if k > 0 {
            let contrib = matmul(&g_m, &step.y.transpose(), &mut ops)?;
            g_z_prev = Some(match g_z_prev {
                Some(gz) => gz.add(&contrib)?,
                None => contrib,
            });
        }
        g_y = g_y_prev;
        g_z = g_z_prev;
    }

    // Y₀ = A/s, s = ‖A‖_F, ∂s/∂A = A/s
    g_s -= g_y.dot(a)? / (s * s);
    let grad = g_y.axpby(1.0 / s, a, g_s / s)?;

    let n = a.dim();
    let yz = crate::matcore::matmul_uncounted(&trace.y, &trace.z);
    let residual = frobenius_norm(&yz.sub(&Matrix::identity(n))?);
    Ok(GradResult {
        grad,
        residual_b: residual,
        iterations,
        counters: ops,
    })
}

#[derive(Debug, Clone)]
pub struct SignBlockResult {
    /// Converged `sign(H)` of the `2n × 2n` block matrix.
    pub sign: Matrix,
    pub iterations: usize,
    /// `‖S² − I‖_F` at exit.
    pub residual: f64,
}

impl SignBlockResult {
    /// Top-right `n × n` block, which converges to `2X`.
    pub fn top_right(&self) -> Matrix {
        let n = self.sign.rows() / 2;
        self.sign.block(0, n, n, n)
    }
}

/// Plain NS sign iteration `H ← H(3I − H²)/2` on the block matrix
/// `[[B, C], [0, −B]] / ‖B‖_F`, run until `‖H² − I‖_F < tol` or `max_iters`.
///
/// This is the uncoupled form of [`lyapunov_grad`]'s iteration and serves as
/// an independent cross-check of it.
pub fn sign_block_iteration(b: &SymMatrix, c: &Matrix, max_iters: usize, tol: f64) -> Result<SignBlockResult> {
    check_same_dims("sign_block_iteration", b, c)?;
    let n = b.dim();
    let nb = frobenius_norm(b);
    let mut h = Matrix::zeros(2 * n, 2 * n);
    h.set_block(0, 0, &b.scale(1.0 / nb));
    h.set_block(0, n, &c.scale(1.0 / nb));
    h.set_block(n, n, &b.scale(-1.0 / nb));
    let eye = Matrix::identity(2 * n);
    let mut ops = OpCounters::new();
    let mut residual = f64::INFINITY;
    for it in 0..=max_iters {
        let h2 = matmul(&h, &h, &mut ops)?;
        residual = frobenius_norm(&h2.sub(&eye)?);
        if residual < tol || it == max_iters {
            return Ok(SignBlockResult {
                sign: h,
                iterations: it,
                residual,
            });
        }
        let three_minus = eye.axpby(3.0, &h2, -1.0)?;
        h = matmul(&h, &three_minus, &mut ops)?.scale(0.5);
        if !h.is_finite() {
            return Err(Error::Diverged {
                step: it + 1,
                norm: f64::NAN,
                limit: DIVERGENCE_FACTOR,
            });
        }
    }
    Ok(SignBlockResult {
        sign: h,
        iterations: max_iters,
        residual,
    })
}
