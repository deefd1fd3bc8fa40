//! Error metrics and a finite-difference gradient oracle.

use crate::coeffs::Target;
use crate::error::{Error, Result};
use crate::forward::spectral;
use crate::matcore::{frobenius_norm, matmul_uncounted, sym_eig, Matrix, OpCounters, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub mae: f64,
    pub nrmse: f64,
    /// `‖Y² − A‖_F/‖A‖_F` (Sqrt) or `‖Y·A·Y − I‖_F` (InvSqrt).
    pub defining_residual: f64,
    /// InvSqrt only.
    pub whitening_error: Option<f64>,
}

impl ErrorReport {
    pub fn compute(target: Target, a: &SymMatrix, approx: &SymMatrix, exact: &SymMatrix) -> Result<Self> {
        let whitening_error = match target {
            Target::Sqrt => None,
            Target::InvSqrt => Some(whitening_error(a, approx)?),
        };
        Ok(Self {
            mae: mae(approx, exact)?,
            nrmse: nrmse(approx, exact)?,
            defining_residual: defining_residual(target, a, approx)?,
            whitening_error,
        })
    }
}

fn check_dims(op: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            op,
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    Ok(())
}

/// Mean of `|approx − exact|` over all entries.
pub fn mae(approx: &Matrix, exact: &Matrix) -> Result<f64> {
    check_dims("mae", approx, exact)?;
    let n = approx.as_slice().len() as f64;
    let sum: f64 = approx
        .as_slice()
        .iter()
        .zip(exact.as_slice())
        .map(|(x, y)| (x - y).abs())
        .sum();
    Ok(sum / n)
}

/// `RMSE(approx, exact) / RMS(exact)`, i.e. the relative Frobenius error.
pub fn nrmse(approx: &Matrix, exact: &Matrix) -> Result<f64> {
    check_dims("nrmse", approx, exact)?;
    let scale = frobenius_norm(exact);
    if scale == 0.0 {
        return Err(Error::InvalidArgument("NRMSE is undefined for a zero reference".into()));
    }
    Ok(frobenius_norm(&approx.sub(exact)?) / scale)
}

/// `‖Y·A·Y − I‖_F`: distance of the whitened covariance from the identity.
pub fn whitening_error(a: &SymMatrix, isqrt_approx: &SymMatrix) -> Result<f64> {
    check_dims("whitening_error", a, isqrt_approx)?;
    let w = matmul_uncounted(&matmul_uncounted(isqrt_approx, a), isqrt_approx);
    Ok(frobenius_norm(&w.sub(&Matrix::identity(a.dim()))?))
}

pub fn defining_residual(target: Target, a: &SymMatrix, approx: &Matrix) -> Result<f64> {
    check_dims("defining_residual", a, approx)?;
    match target {
        Target::Sqrt => {
            let sq = matmul_uncounted(approx, approx);
            Ok(frobenius_norm(&sq.sub(a)?) / frobenius_norm(a))
        }
        Target::InvSqrt => {
            let w = matmul_uncounted(&matmul_uncounted(approx, a), approx);
            Ok(frobenius_norm(&w.sub(&Matrix::identity(a.dim()))?))
        }
    }
}

/// Default finite-difference step: `1e-5·‖a‖_F/dim`, capped at `1e-3·λ_min`.
///
/// The truncation error of the central difference scales with
/// `(h/λ_min)²`; without the cap a nearly singular input would be perturbed
/// by a sizeable fraction of its smallest eigenvalue.
pub fn default_step(a: &SymMatrix) -> Result<f64> {
    let lmin = sym_eig(a, &mut OpCounters::new())?.eigenvalues[0];
    if !(lmin > 0.0) {
        return Err(Error::NotPositiveDefinite(format!("smallest eigenvalue {lmin:e}")));
    }
    Ok((1e-5 * frobenius_norm(a) / a.dim() as f64).min(1e-3 * lmin))
}

/// Central differences of `f` along symmetric directions.
///
/// Entry `(i, i)` is perturbed by `±h`; entries `(i, j)` and `(j, i)` are
/// perturbed together by `±h/2` each. For a smooth `f` the result is the
/// symmetric part of its gradient.
pub fn central_diff_sym<F>(a: &SymMatrix, h: f64, f: F) -> Result<Matrix>
where
    F: Fn(&SymMatrix) -> Result<f64>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let n = a.dim();
    let mut grad = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let d = if i == j { h } else { h / 2.0 };
            let shifted = |sign: f64| {
                let mut m = a.as_matrix().clone();
                m.as_mut_slice()[i * n + j] += sign * d;
                if i != j {
                    m.as_mut_slice()[j * n + i] += sign * d;
                }
                SymMatrix::from_symmetrized(&m)
            };
            let g = (f(&shifted(1.0))? - f(&shifted(-1.0))?) / (2.0 * h);
            grad.as_mut_slice()[i * n + j] = g;
            grad.as_mut_slice()[j * n + i] = g;
        }
    }
    Ok(grad)
}

/// Finite-difference gradient of `l(A) = ⟨upstream, spectral(A, target)⟩`.
///
/// `h` defaults to [`default_step`]. If a perturbed matrix leaves the positive
/// definite cone the whole sweep is retried once with `h/10`.
pub fn finite_diff_grad(target: Target, a: &SymMatrix, upstream: &Matrix, h: Option<f64>) -> Result<Matrix> {
    check_dims("finite_diff_grad", a, upstream)?;
    let h = match h {
        Some(h) => h,
        None => default_step(a)?,
    };
    let loss = |m: &SymMatrix| spectral(m, target)?.value.dot(upstream);
    match central_diff_sym(a, h, loss) {
        Err(Error::NotPositiveDefinite(_)) => central_diff_sym(a, h / 10.0, loss),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backward::bartels_stewart;
    use crate::matcore::{random_normal, random_spd, RandomSpdConfig};

    #[test]
    fn mae_examples() {
        let a = random_normal(3, 4, 1, 0);
        assert_eq!(mae(&a, &a).unwrap(), 0.0);
        let e = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let x = e.map(|v| v + 0.1);
        assert!((mae(&x, &e).unwrap() - 0.1).abs() < 1e-15);
        assert!(mae(&e, &a).is_err());
    }

    #[test]
    fn mae_matches_loop() {
        let a = random_normal(5, 5, 2, 0);
        let b = random_normal(5, 5, 2, 1);
        let mut s = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                s += (a[(i, j)] - b[(i, j)]).abs();
            }
        }
        assert_eq!(mae(&a, &b).unwrap(), s / 25.0);
    }

    #[test]
    fn nrmse_examples() {
        let e = random_normal(4, 4, 3, 0);
        assert_eq!(nrmse(&e, &e).unwrap(), 0.0);
        assert!((nrmse(&e.scale(1.1), &e).unwrap() - 0.1).abs() < 1e-12);
        assert!(nrmse(&e, &Matrix::zeros(4, 4)).is_err());

        let b = random_normal(4, 4, 3, 1);
        let (mut se, mut sx) = (0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                se += (b[(i, j)] - e[(i, j)]).powi(2);
                sx += e[(i, j)].powi(2);
            }
        }
        let want = (se / 16.0).sqrt() / (sx / 16.0).sqrt();
        assert!((nrmse(&b, &e).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn whitening_examples() {
        let a = SymMatrix::from_diag(&[4.0, 1.0]);
        assert_eq!(whitening_error(&a, &SymMatrix::identity(2)).unwrap(), 3.0);
        let a = random_spd(&RandomSpdConfig::new(16, 4)).unwrap();
        let y = spectral(&a, Target::InvSqrt).unwrap().value;
        assert!(whitening_error(&a, &y).unwrap() < 1e-8);
    }

    #[test]
    fn report_fields() {
        let a = random_spd(&RandomSpdConfig::new(6, 2)).unwrap();
        let s = spectral(&a, Target::Sqrt).unwrap().value;
        let r = ErrorReport::compute(Target::Sqrt, &a, &s, &s).unwrap();
        assert_eq!(r.mae, 0.0);
        assert!(r.defining_residual < 1e-12);
        assert!(r.whitening_error.is_none());
        let i = spectral(&a, Target::InvSqrt).unwrap().value;
        let r = ErrorReport::compute(Target::InvSqrt, &a, &i, &i).unwrap();
        assert!(r.whitening_error.unwrap() < 1e-8);
    }

    #[test]
    fn fd_identity_and_scalar() {
        let g = random_normal(3, 3, 5, 0).symmetrized();
        let fd = finite_diff_grad(Target::Sqrt, &SymMatrix::identity(3), &g, None).unwrap();
        assert!(fd.sub(&g.scale(0.5)).unwrap().max_abs() < 1e-5);

        let fd = finite_diff_grad(
            Target::Sqrt,
            &SymMatrix::from_diag(&[4.0]),
            &Matrix::from_rows(&[&[1.0]]),
            None,
        )
        .unwrap();
        assert!((fd[(0, 0)] - 0.25).abs() < 1e-7);
    }

    #[test]
    fn fd_matches_bartels_stewart() {
        for seed in 0..3 {
            let a = random_spd(&RandomSpdConfig::new(6, seed)).unwrap();
            let g = random_normal(6, 6, seed, 9).symmetrized();
            let fd = finite_diff_grad(Target::Sqrt, &a, &g, None).unwrap();
            let s = spectral(&a, Target::Sqrt).unwrap().value;
            let x = bartels_stewart(&s, &g).unwrap();
            assert!(nrmse(&fd, &x).unwrap() < 1e-5);
        }
    }

    #[test]
    fn fd_retries_smaller_step_then_errors() {
        let a = SymMatrix::from_diag(&[1.0, 1e-3]);
        let g = Matrix::identity(2);
        // 2e-3 crosses zero, 2e-4 does not
        let fd = finite_diff_grad(Target::InvSqrt, &a, &g, Some(2e-3)).unwrap();
        let want = -0.5 * 1e-3f64.powf(-1.5);
        assert!((fd[(1, 1)] - want).abs() < 0.05 * want.abs());
        assert!(matches!(
            finite_diff_grad(Target::InvSqrt, &a, &g, Some(1.0)),
            Err(Error::NotPositiveDefinite(_))
        ));
    }
}
