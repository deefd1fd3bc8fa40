//! Dense matrix kernel.
//!
//! Row-major `f64` storage, a symmetric newtype on top of it, and the handful
//! of counted primitives every approximant is built from: matrix product,
//! SPD linear solve and symmetric eigendecomposition. Each counted primitive
//! takes an explicit [`OpCounters`] sink so a caller can audit exactly how many
//! of each operation a method performed.

use std::fmt;
use std::ops::{AddAssign, Deref, Index, IndexMut};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Asymmetry accepted by [`SymMatrix::new`], relative to the largest entry.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Jacobi stops once the off-diagonal Frobenius mass falls below this
/// fraction of `‖A‖_F`.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Largest Kronecker product side length [`kron`] will materialise.
pub const KRON_MAX_DIM: usize = 64;

/// Tallies of the expensive operations performed inside one call scope.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct OpCounters {
    pub matmul: u64,
    pub solve: u64,
    pub inverse: u64,
    pub eig: u64,
}

impl OpCounters {
    pub fn new() -> Self {
        Self::default()
    }
}

impl AddAssign for OpCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.matmul += rhs.matmul;
        self.solve += rhs.solve;
        self.inverse += rhs.inverse;
        self.eig += rhs.eig;
    }
}

/// Dense row-major real matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:>12.6e} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices. Panics on ragged input; intended for
    /// literals in tests and examples.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: f64) -> Matrix {
        self.map(|x| x * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    fn zip_with(&self, other: &Matrix, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op,
                lhs: self.shape(),
                rhs: other.shape(),
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// `alpha·self + beta·other`.
    pub fn axpby(&self, alpha: f64, other: &Matrix, beta: f64) -> Result<Matrix> {
        self.zip_with(other, "axpby", |a, b| alpha * a + beta * b)
    }

    /// Adds `s` to every diagonal entry in place.
    pub fn add_diag(&mut self, s: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.cols + i] += s;
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Sum of elementwise products, `tr(selfᵀ other)`.
    pub fn dot(&self, other: &Matrix) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op: "dot",
                lhs: self.shape(),
                rhs: other.shape(),
            });
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest `|a_ij − a_ji|`; infinite for non-square input.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `(M + Mᵀ)/2`.
    pub fn symmetrized(&self) -> Matrix {
        assert!(self.is_square(), "symmetrized requires a square matrix");
        let n = self.rows;
        let mut out = self.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Copies the `rows × cols` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, src: &Matrix) {
        for i in 0..src.rows {
            for j in 0..src.cols {
                self[(r0 + i, c0 + j)] = src[(i, j)];
            }
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Square symmetric matrix. Construction either checks symmetry or forces it.
#[derive(Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sym")?;
        self.0.fmt(f)
    }
}

impl SymMatrix {
    /// Accepts `m` if it is square, non-empty and symmetric to
    /// [`SYMMETRY_TOL`] relative to its largest entry; the stored copy is
    /// exactly symmetric.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                op: "SymMatrix::new",
                lhs: m.shape(),
                rhs: (m.rows, m.rows),
            });
        }
        if m.rows == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be at least 1".into()));
        }
        let asym = m.asymmetry();
        if asym > SYMMETRY_TOL * m.max_abs().max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(Self(m.symmetrized()))
    }

    /// Replaces `m` by `(m + mᵀ)/2` unconditionally. For results that are
    /// symmetric in exact arithmetic.
    pub fn from_symmetrized(m: &Matrix) -> Self {
        assert!(m.is_square() && m.rows > 0);
        Self(m.symmetrized())
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self(Matrix::from_diag(diag))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix(self.0.scale(s))
    }
}

impl Deref for SymMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// Ordered collection of same-dimension symmetric matrices.
#[derive(Debug, Clone)]
pub struct MatrixBatch {
    dim: usize,
    items: Vec<SymMatrix>,
}

impl MatrixBatch {
    pub fn new(items: Vec<SymMatrix>) -> Result<Self> {
        let dim = items
            .first()
            .map(SymMatrix::dim)
            .ok_or_else(|| Error::InvalidArgument("batch must contain at least one matrix".into()))?;
        if let Some(bad) = items.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch {
                op: "MatrixBatch::new",
                lhs: (dim, dim),
                rhs: (bad.dim(), bad.dim()),
            });
        }
        Ok(Self { dim, items })
    }

    /// `count` draws of [`random_spd`], item `i` on ChaCha stream `i` of `seed`.
    pub fn random_spd(count: usize, dim: usize, seed: u64, epsilon: f64) -> Result<Self> {
        let items = (0..count as u64)
            .map(|stream| {
                random_spd(&RandomSpdConfig {
                    dim,
                    seed,
                    epsilon,
                    stream,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(items)
    }

    pub fn count(&self) -> usize {
        self.items.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn items(&self) -> &[SymMatrix] {
        &self.items
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SymMatrix> {
        self.items.iter()
    }
}

/// `A = U·diag(eigenvalues)·Uᵀ`, eigenvalues ascending, eigenvectors in columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomp {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl SpectralDecomp {
    /// `U·diag(f(λ))·Uᵀ` without touching any counter.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.eigenvalues.len();
        let u = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += u[(i, k)] * fl[k] * u[(j, k)];
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RandomSpdConfig {
    pub dim: usize,
    pub seed: u64,
    /// Diagonal regularizer, relative to the mean eigenvalue.
    pub epsilon: f64,
    /// ChaCha stream; distinct streams of one seed are independent.
    pub stream: u64,
}

impl RandomSpdConfig {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            seed,
            epsilon: 1e-5,
            stream: 0,
        }
    }
}

/// Dense product `a·b`.
pub fn matmul(a: &Matrix, b: &Matrix, ops: &mut OpCounters) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch {
            op: "matmul",
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    ops.matmul += 1;
    Ok(matmul_uncounted(a, b))
}

pub(crate) fn matmul_uncounted(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, m, p) = (a.rows, a.cols, b.cols);
    let mut out = vec![0.0; n * p];
    for i in 0..n {
        let row = &mut out[i * p..(i + 1) * p];
        for k in 0..m {
            let aik = a.data[i * m + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b.data[k * p..(k + 1) * p];
            for (o, &bkj) in row.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    Matrix {
        rows: n,
        cols: p,
        data: out,
    }
}

pub fn frobenius_norm(a: &Matrix) -> f64 {
    a.data.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `a·x = rhs` for symmetric positive definite `a`.
///
/// Cholesky first; if a pivot is non-positive the system is retried with
/// partially pivoted LU, which only fails on a (numerically) singular `a`.
pub fn solve_spd(a: &SymMatrix, rhs: &Matrix, ops: &mut OpCounters) -> Result<Matrix> {
    if a.dim() != rhs.rows {
        return Err(Error::DimensionMismatch {
            op: "solve_spd",
            lhs: a.shape(),
            rhs: rhs.shape(),
        });
    }
    ops.solve += 1;
    match cholesky(a) {
        Ok(l) => Ok(cholesky_solve(&l, rhs)),
        Err(_) => lu_solve(a, rhs),
    }
}

/// Solves a general square system with partially pivoted LU.
pub fn solve_general(a: &Matrix, rhs: &Matrix, ops: &mut OpCounters) -> Result<Matrix> {
    if !a.is_square() || a.rows != rhs.rows {
        return Err(Error::DimensionMismatch {
            op: "solve_general",
            lhs: a.shape(),
            rhs: rhs.shape(),
        });
    }
    ops.solve += 1;
    lu_solve(a, rhs)
}

/// Lower Cholesky factor, or an error naming the first non-positive pivot.
fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.rows;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "Cholesky pivot {d:e} at column {j}"
            )));
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &Matrix, rhs: &Matrix) -> Matrix {
    let n = l.rows;
    let mut x = rhs.clone();
    for c in 0..rhs.cols {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

pub(crate) fn lu_solve(a: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    let n = a.rows;
    let mut lu = a.clone();
    let mut x = rhs.clone();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, lu[(r, col)].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= f64::EPSILON * scale * n as f64 {
            return Err(Error::Singular {
                column: col,
                pivot: pmax,
            });
        }
        if piv != col {
            for j in 0..n {
                lu.data.swap(col * n + j, piv * n + j);
            }
            for j in 0..x.cols {
                x.data.swap(col * x.cols + j, piv * x.cols + j);
            }
        }
        let d = lu[(col, col)];
        for r in (col + 1)..n {
            let f = lu[(r, col)] / d;
            if f == 0.0 {
                continue;
            }
            lu[(r, col)] = f;
            for j in (col + 1)..n {
                let v = lu[(col, j)];
                lu[(r, j)] -= f * v;
            }
            for j in 0..x.cols {
                let v = x[(col, j)];
                x[(r, j)] -= f * v;
            }
        }
    }
    for c in 0..x.cols {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..n {
                s -= lu[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Rotations whose pivot is negligible against the geometric mean of the two
/// diagonal entries are skipped, which gives small eigenvalues of SPD input
/// high relative accuracy. Fails if the off-diagonal mass is still above
/// [`JACOBI_TOL`]`·‖A‖_F` after [`JACOBI_MAX_SWEEPS`] sweeps.
pub fn sym_eig(a: &SymMatrix, ops: &mut OpCounters) -> Result<SpectralDecomp> {
    ops.eig += 1;
    let n = a.dim();
    let mut m = a.as_matrix().clone();
    let mut v = Matrix::identity(n);
    let norm = frobenius_norm(&m);
    let floor = norm * 1e-300_f64.max(f64::EPSILON * f64::EPSILON);

    let off_mass = |m: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * m[(i, j)] * m[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_mass(&m);
        if off == 0.0 {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            if off <= JACOBI_TOL * norm {
                break;
            }
            return Err(Error::NoConvergence {
                sweeps,
                residual: off / norm,
            });
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                if apq.abs() <= f64::EPSILON * 0.5 * (app.abs() * aqq.abs()).sqrt() || apq.abs() <= floor {
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SpectralDecomp {
        eigenvalues,
        eigenvectors,
    })
}

/// Kronecker product `a ⊗ b` for square factors, limited to
/// [`KRON_MAX_DIM`] on a side.
pub fn kron(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if !a.is_square() || !b.is_square() {
        return Err(Error::InvalidArgument("kron expects square factors".into()));
    }
    let (na, nb) = (a.rows, b.rows);
    let n = na * nb;
    if n > KRON_MAX_DIM {
        return Err(Error::Oversize {
            what: "Kronecker product",
            dim: n,
            limit: KRON_MAX_DIM,
        });
    }
    Ok(Matrix::from_fn(n, n, |r, c| {
        a[(r / nb, c / nb)] * b[(r % nb, c % nb)]
    }))
}

/// `(XXᵀ)/dim + ε·tr(XXᵀ/dim)/dim·I` with `X` a `dim × dim` standard normal
/// draw. The generator is ChaCha8 keyed by `(seed, stream)`, so output depends
/// only on the config.
pub fn random_spd(cfg: &RandomSpdConfig) -> Result<SymMatrix> {
    if cfg.dim == 0 {
        return Err(Error::InvalidArgument("dim must be at least 1".into()));
    }
    if !(cfg.epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {}",
            cfg.epsilon
        )));
    }
    let n = cfg.dim;
    let x = random_normal(n, n, cfg.seed, cfg.stream);
    let mut a = matmul_uncounted(&x, &x.transpose()).scale(1.0 / n as f64);
    let shift = cfg.epsilon * a.trace() / n as f64;
    a.add_diag(shift);
    Ok(SymMatrix::from_symmetrized(&a))
}

/// `rows × cols` matrix of i.i.d. standard normals from ChaCha8 `(seed, stream)`.
pub fn random_normal(rows: usize, cols: usize, seed: u64, stream: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let data = (0..rows * cols)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    Matrix {
        rows,
        cols,
        data,
    }
}

/// Centered sample covariance `(X − μ)(X − μ)ᵀ + ε·I` of a `features × samples`
/// data matrix.
pub fn sample_covariance(data: &Matrix, epsilon: f64) -> Result<SymMatrix> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "covariance regularizer must be positive (got {epsilon}); the covariance may be singular"
        )));
    }
    let (c, s) = data.shape();
    if c == 0 || s == 0 {
        return Err(Error::InvalidArgument("empty data matrix".into()));
    }
    let mut centered = data.clone();
    for i in 0..c {
        let mean = (0..s).map(|j| data[(i, j)]).sum::<f64>() / s as f64;
        for j in 0..s {
            centered[(i, j)] -= mean;
        }
    }
    let mut a = matmul_uncounted(&centered, &centered.transpose());
    a.add_diag(epsilon);
    Ok(SymMatrix::from_symmetrized(&a))
}
