//! Taylor and Padé coefficients of `(1 − z)^{±1/2}`.
//!
//! Sign conventions follow the rational forms used by the matrix code:
//!
//! * `Sqrt`: `(1 − z)^{1/2} ≈ 1 − Σ c_k z^k ≈ (1 − Σ p_m z^m) / (1 − Σ q_n z^n)`
//! * `InvSqrt`: `(1 − z)^{−1/2} ≈ 1 + Σ c_k z^k ≈ (1 + Σ p_m z^m) / (1 + Σ q_n z^n)`
//!
//! with every `c_k = |binom(±1/2, k)|` positive. Under these conventions the
//! diagonal tables of the two targets are related by `p ↔ −q`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Sqrt,
    InvSqrt,
}

impl Target {
    /// The exponent `±1/2`.
    pub fn exponent(self) -> f64 {
        match self {
            Target::Sqrt => 0.5,
            Target::InvSqrt => -0.5,
        }
    }

    /// Sign in front of the series and of both Padé sums: −1 for `Sqrt`, +1
    /// for `InvSqrt`.
    pub fn series_sign(self) -> f64 {
        match self {
            Target::Sqrt => -1.0,
            Target::InvSqrt => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Target::Sqrt => "sqrt",
            Target::InvSqrt => "isqrt",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sqrt" => Ok(Target::Sqrt),
            "isqrt" | "invsqrt" | "inv_sqrt" => Ok(Target::InvSqrt),
            other => Err(Error::InvalidArgument(format!("unknown target '{other}'"))),
        }
    }
}

/// `|binom(±1/2, k)|` by the running product `Π (a − i)/(i + 1)`.
pub fn binom_abs(target: Target, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "binomial index must be at least 1; the constant term is implicit".into(),
        ));
    }
    let a = target.exponent();
    let mut r = 1.0;
    for i in 0..k {
        r *= (a - i as f64) / (i + 1) as f64;
    }
    Ok(r.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorTable {
    pub target: Target,
    /// `c[k − 1] = |binom(±1/2, k)|` for `k = 1..=degree`.
    pub c: Vec<f64>,
}

impl TaylorTable {
    pub fn degree(&self) -> usize {
        self.c.len()
    }

    /// Truncated series `1 ± Σ c_k z^k` at a scalar.
    pub fn eval(&self, z: f64) -> f64 {
        let sign = self.target.series_sign();
        let mut acc = 0.0;
        for &ck in self.c.iter().rev() {
            acc = (acc + ck) * z;
        }
        1.0 + sign * acc
    }
}

pub fn taylor_table(target: Target, degree: usize) -> Result<TaylorTable> {
    if degree == 0 {
        return Err(Error::InvalidArgument("Taylor degree must be at least 1".into()));
    }
    let c = (1..=degree)
        .map(|k| binom_abs(target, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(TaylorTable { target, c })
}

/// `[M, N]` Padé approximant of `(1 − z)^{±1/2}`; see the module docs for signs.
#[derive(Debug, Clone, PartialEq)]
pub struct PadeTable {
    pub target: Target,
    pub degree_m: usize,
    pub degree_n: usize,
    /// Numerator coefficients `p_1..p_M`.
    pub p: Vec<f64>,
    /// Denominator coefficients `q_1..q_N`.
    pub q: Vec<f64>,
}

impl PadeTable {
    /// `1 ± Σ p_m z^m`.
    pub fn numerator(&self, z: f64) -> f64 {
        poly_one_plus(self.target.series_sign(), &self.p, z)
    }

    /// `1 ± Σ q_n z^n`.
    pub fn denominator(&self, z: f64) -> f64 {
        poly_one_plus(self.target.series_sign(), &self.q, z)
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.numerator(z) / self.denominator(z)
    }
}

fn poly_one_plus(sign: f64, coeffs: &[f64], z: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = (acc + c) * z;
    }
    1.0 + sign * acc
}

/// Padé coefficients from the matching conditions against the Taylor series
/// of degree `M + N`.
///
/// Writing the series as `Σ s_k z^k` (`s_0 = 1`, `s_k = ±c_k`) and the
/// denominator as `1 + Σ d_n z^n` with `d_n = ±q_n`, the coefficients of
/// `z^{M+1}..z^{M+N}` in `denominator · series` must vanish. That is an `N × N`
/// Toeplitz system in `d`; the numerator then follows by forward substitution
/// over the first `M` powers.
///
/// The series coefficients are dyadic rationals and the Toeplitz system is
/// badly conditioned beyond a few degrees, so everything is solved exactly and
/// rounded once at the end.
pub fn pade_table(target: Target, m: usize, n: usize) -> Result<Arc<PadeTable>> {
    type Cache = RwLock<HashMap<(Target, usize, usize), Arc<PadeTable>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(t) = cache.read().expect("pade cache poisoned").get(&(target, m, n)) {
        return Ok(Arc::clone(t));
    }
    let table = Arc::new(compute_pade(target, m, n)?);
    let mut w = cache.write().expect("pade cache poisoned");
    Ok(Arc::clone(w.entry((target, m, n)).or_insert(table)))
}

/// Signed series coefficients `s_0..=s_deg` of `(1 − z)^{±1/2}`.
fn exact_series(target: Target, deg: usize) -> Vec<BigRational> {
    let a = match target {
        Target::Sqrt => BigRational::new(1.into(), 2.into()),
        Target::InvSqrt => BigRational::new((-1).into(), 2.into()),
    };
    let mut out = Vec::with_capacity(deg + 1);
    let mut term = BigRational::one();
    out.push(term.clone());
    for k in 0..deg {
        // binom(a, k+1)·(−1)^{k+1}
        let kk = BigRational::from_integer(BigInt::from(k));
        term = -term * (&a - &kk) / BigRational::from_integer(BigInt::from(k + 1));
        out.push(term.clone());
    }
    out
}

/// Gaussian elimination over the rationals; `None` when singular.
fn exact_solve(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &a[col][col];
            let (top, bottom) = a.split_at_mut(r);
            for (dst, src) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                *dst -= &f * src;
            }
            let v = &f * &b[col];
            b[r] -= v;
        }
    }
    let mut x = vec![BigRational::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..n {
            acc -= &a[r][c] * &x[c];
        }
        x[r] = acc / &a[r][r];
    }
    Some(x)
}

fn compute_pade(target: Target, m: usize, n: usize) -> Result<PadeTable> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "Padé degrees must be at least 1, got [{m}, {n}]"
        )));
    }
    let s = exact_series(target, m + n);
    let series = |k: isize| -> BigRational {
        if k < 0 {
            BigRational::zero()
        } else {
            s[k as usize].clone()
        }
    };

    // Row r ↔ power M+1+r, column j ↔ d_{j+1}: Σ_j d_{j+1} s_{M+1+r−(j+1)} = −s_{M+1+r}
    let system: Vec<Vec<BigRational>> = (0..n)
        .map(|r| (0..n).map(|j| series((m + r) as isize - j as isize)).collect())
        .collect();
    let rhs: Vec<BigRational> = (0..n).map(|r| -series((m + 1 + r) as isize)).collect();
    let d = exact_solve(system, rhs).ok_or_else(|| {
        Error::InvalidArgument(format!("[{m}, {n}] Padé approximant of {target} does not exist"))
    })?;

    let sign = target.series_sign();
    let to_f64 = |x: &BigRational| sign * x.to_f64().unwrap_or(f64::NAN);
    let q: Vec<f64> = d.iter().map(to_f64).collect();
    let p: Vec<f64> = (1..=m)
        .map(|k| {
            let mut e = series(k as isize);
            for j in 1..=n.min(k) {
                e += &d[j - 1] * series((k - j) as isize);
            }
            to_f64(&e)
        })
        .collect();
    Ok(PadeTable {
        target,
        degree_m: m,
        degree_n: n,
        p,
        q,
    })
}

/// Minimum of the table's denominator polynomial over a uniform grid of
/// `grid_points` on `[0, 1]`, endpoints included. Returns `(min, argmin)`.
pub fn denominator_poly_min(table: &PadeTable, grid_points: usize) -> Result<(f64, f64)> {
    if grid_points < 2 {
        return Err(Error::InvalidArgument("grid needs at least 2 points".into()));
    }
    let step = 1.0 / (grid_points - 1) as f64;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..grid_points {
        let x = if i == grid_points - 1 { 1.0 } else { i as f64 * step };
        let v = table.denominator(x);
        if v < best.0 {
            best = (v, x);
        }
    }
    Ok(best)
}
