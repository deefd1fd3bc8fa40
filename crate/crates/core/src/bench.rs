//! Numerical sweeps behind the `matroot` CLI.
//!
//! Every sweep draws its suite from [`random_spd`] (or random data for the
//! whitening demo) on ChaCha streams `0..suite_size` of the configured seed,
//! so error and counter columns are reproducible. Timing is the median of
//! `reps` single-threaded runs on the first suite item (the whole batch for
//! the batch sweep) and is informational only.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::backward::{
    bartels_stewart_counted, lyapunov_grad, ns_backward, reference_grad, BackwardConfig, GradRequest,
};
use crate::coeffs::{pade_table, Target};
use crate::diffcheck::{defining_residual, mae, nrmse};
use crate::error::{Error, Result};
use crate::forward::{forward, ForwardConfig, Method};
use crate::matcore::{random_normal, random_spd, sample_covariance, Matrix, OpCounters, RandomSpdConfig, SymMatrix};

/// Environment variable capping the worker count (`0` or unset = all cores).
pub const THREADS_ENV: &str = "MATROOT_THREADS";

/// Stream offset separating upstream gradients from the suite matrices.
const UPSTREAM_STREAM: u64 = 1 << 32;

pub const FP_DEGREES: [usize; 6] = [7, 9, 11, 13, 15, 17];
pub const FP_ITERATIONS: [usize; 5] = [3, 4, 5, 6, 7];
pub const BP_LYAPUNOV_ITERATIONS: [usize; 6] = [5, 6, 7, 8, 9, 10];
pub const BP_NS_ITERATIONS: [usize; 5] = [3, 4, 5, 6, 7];
pub const BATCH_SIZES: [usize; 4] = [1, 4, 16, 64];
pub const DIMS: [usize; 6] = [4, 8, 16, 32, 64, 128];

/// Degree and iteration count used where a sweep does not vary them.
pub const DEFAULT_DEGREE: usize = 11;
pub const DEFAULT_NS_ITERATIONS: usize = 5;
pub const DEFAULT_LYAPUNOV_ITERATIONS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Fp,
    Bp,
    Batch,
    Dim,
    Whiten,
    Coeffs,
}

impl Sweep {
    pub fn as_str(self) -> &'static str {
        match self {
            Sweep::Fp => "fp",
            Sweep::Bp => "bp",
            Sweep::Batch => "batch",
            Sweep::Dim => "dim",
            Sweep::Whiten => "whiten",
            Sweep::Coeffs => "coeffs",
        }
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fp" => Ok(Sweep::Fp),
            "bp" => Ok(Sweep::Bp),
            "batch" => Ok(Sweep::Batch),
            "dim" => Ok(Sweep::Dim),
            "whiten" => Ok(Sweep::Whiten),
            "coeffs" => Ok(Sweep::Coeffs),
            other => Err(Error::InvalidArgument(format!("unknown sweep '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub suite_size: usize,
    pub dim: usize,
    /// Overrides the batch sizes of the batch sweep.
    pub batch: Option<usize>,
    pub seed: u64,
    pub reps: usize,
    /// `None` selects each sweep's default method set.
    pub methods: Option<Vec<Method>>,
    /// `None` selects each sweep's default targets.
    pub targets: Option<Vec<Target>>,
    /// Covariance regularizer for the whitening demo (absolute) or relative
    /// shift of the random SPD generator.
    pub epsilon: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            suite_size: 100,
            dim: 64,
            batch: None,
            seed: 42,
            reps: 5,
            methods: None,
            targets: None,
            epsilon: 1e-5,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.suite_size == 0 {
            return Err(Error::InvalidArgument("suite size must be at least 1".into()));
        }
        if self.dim == 0 {
            return Err(Error::InvalidArgument("dim must be at least 1".into()));
        }
        if self.batch == Some(0) {
            return Err(Error::InvalidArgument("batch must be at least 1".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidArgument("reps must be at least 1".into()));
        }
        if matches!(&self.methods, Some(m) if m.is_empty()) {
            return Err(Error::InvalidArgument("method list is empty".into()));
        }
        if matches!(&self.targets, Some(t) if t.is_empty()) {
            return Err(Error::InvalidArgument("target list is empty".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive (got {}); the covariance may be singular",
                self.epsilon
            )));
        }
        Ok(())
    }

    fn methods_or(&self, default: &[Method]) -> Vec<Method> {
        self.methods.clone().unwrap_or_else(|| default.to_vec())
    }

    fn targets_or(&self, default: &[Target]) -> Vec<Target> {
        self.targets.clone().unwrap_or_else(|| default.to_vec())
    }

    fn spd(&self, dim: usize, item: usize) -> Result<SymMatrix> {
        random_spd(&RandomSpdConfig {
            dim,
            seed: self.seed,
            epsilon: self.epsilon,
            stream: item as u64,
        })
    }

    fn suite(&self, dim: usize) -> Result<Vec<SymMatrix>> {
        (0..self.suite_size).into_par_iter().map(|i| self.spd(dim, i)).collect()
    }

    fn upstream(&self, dim: usize, item: usize) -> Matrix {
        random_normal(dim, dim, self.seed, UPSTREAM_STREAM + item as u64).symmetrized()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub sweep: String,
    pub method: String,
    pub target: String,
    pub param: f64,
    pub time_ns_mean: f64,
    pub mae: f64,
    pub nrmse: f64,
    pub defining_residual: f64,
    pub matmul_count: u64,
    pub solve_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoeffRecord {
    pub target: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub kind: char,
    pub index: usize,
    pub value: f64,
}

/// One `p` row per numerator and one `q` row per denominator coefficient,
/// indices starting at 1.
pub fn coeff_rows(target: Target, m: usize, n: usize) -> Result<Vec<CoeffRecord>> {
    let t = pade_table(target, m, n)?;
    let row = |kind, index, value| CoeffRecord {
        target: target.to_string(),
        m,
        n,
        kind,
        index,
        value,
    };
    let mut out: Vec<_> = t.p.iter().enumerate().map(|(i, &v)| row('p', i + 1, v)).collect();
    out.extend(t.q.iter().enumerate().map(|(i, &v)| row('q', i + 1, v)));
    Ok(out)
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidArgument(format!("CSV output failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("CSV output failed: {e}")))
}

/// CSV header written for benchmark records, including when no row is emitted.
pub const BENCH_HEADER: &str =
    "sweep,method,target,param,time_ns_mean,mae,nrmse,defining_residual,matmul_count,solve_count";
pub const COEFF_HEADER: &str = "target,M,N,kind,index,value";

/// Rayon pool honoring [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'")))?,
        _ => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))
}

/// Runs a sweep inside a pool sized by [`THREADS_ENV`]. The coefficient dump
/// has its own entry point, [`coeff_rows`].
pub fn run_sweep(sweep: Sweep, cfg: &SweepConfig) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let pool = thread_pool()?;
    let mut rows = pool.install(|| match sweep {
        Sweep::Fp => fp_sweep(cfg),
        Sweep::Bp => bp_sweep(cfg),
        Sweep::Batch => batch_sweep(cfg),
        Sweep::Dim => dim_sweep(cfg),
        Sweep::Whiten => whiten_demo(cfg),
        Sweep::Coeffs => Err(Error::InvalidArgument("the coeffs sweep emits coefficient rows; use coeff_rows".into())),
    })?;
    sort_rows(&mut rows);
    Ok(rows)
}

fn method_rank(name: &str) -> usize {
    ["mtp", "mpa", "ns", "ns1", "lya", "spectral"]
        .iter()
        .position(|m| *m == name)
        .unwrap_or(usize::MAX)
}

/// Orders rows by `(method, param, target)`.
pub fn sort_rows(rows: &mut [BenchRecord]) {
    rows.sort_by(|a, b| {
        method_rank(&a.method)
            .cmp(&method_rank(&b.method))
            .then(a.method.cmp(&b.method))
            .then(a.param.total_cmp(&b.param))
            .then(a.target.cmp(&b.target))
    });
}

/// Median wall-clock nanoseconds of `reps` runs of `f`, at least 1.
pub fn time_median<F>(reps: usize, mut f: F) -> Result<f64>
where
    F: FnMut() -> Result<()>,
{
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        f()?;
        samples.push(start.elapsed().as_nanos() as f64);
    }
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    let median = if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        0.5 * (samples[mid - 1] + samples[mid])
    };
    Ok(median.max(1.0))
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `(method, param)` pairs a forward-style sweep visits for one method.
fn forward_params(method: Method, target: Target) -> Vec<usize> {
    match (method, target) {
        (Method::Mtp | Method::Mpa, _) => FP_DEGREES.to_vec(),
        (Method::NsCoupled, _) | (Method::NsOneVar, Target::InvSqrt) => FP_ITERATIONS.to_vec(),
        (Method::NsOneVar, Target::Sqrt) => Vec::new(),
        (Method::Spectral, _) => vec![0],
    }
}

fn forward_config(method: Method, target: Target, param: usize) -> ForwardConfig {
    let cfg = ForwardConfig::new(method, target);
    match method {
        Method::Mtp | Method::Mpa => cfg.with_degree(param),
        Method::NsCoupled | Method::NsOneVar => cfg.with_iterations(param),
        Method::Spectral => cfg,
    }
}

struct Scored {
    mae: f64,
    nrmse: f64,
    residual: f64,
    counters: OpCounters,
}

/// Runs one forward configuration over a suite and averages its errors.
fn score_forward(suite: &[SymMatrix], exact: &[SymMatrix], fc: &ForwardConfig) -> Result<Scored> {
    let per_item: Vec<(f64, f64, f64, OpCounters)> = suite
        .par_iter()
        .zip(exact.par_iter())
        .map(|(a, e)| {
            let r = forward(a, fc)?;
            Ok((
                mae(&r.value, e)?,
                nrmse(&r.value, e)?,
                defining_residual(fc.target, a, &r.value)?,
                r.counters,
            ))
        })
        .collect::<Result<_>>()?;
    let col = |k: fn(&(f64, f64, f64, OpCounters)) -> f64| mean(&per_item.iter().map(k).collect::<Vec<_>>());
    Ok(Scored {
        mae: col(|r| r.0),
        nrmse: col(|r| r.1),
        residual: col(|r| r.2),
        counters: per_item[0].3,
    })
}

fn exact_values(suite: &[SymMatrix], target: Target) -> Result<Vec<SymMatrix>> {
    suite
        .par_iter()
        .map(|a| Ok(crate::forward::spectral(a, target)?.value))
        .collect()
}

/// Forward sweep over `suites` (one per `param_override`, or a single suite
/// with the method's own degree/iteration range).
fn forward_rows(
    sweep: Sweep,
    cfg: &SweepConfig,
    suite: &[SymMatrix],
    methods: &[Method],
    targets: &[Target],
    row_param: Option<f64>,
) -> Result<Vec<BenchRecord>> {
    let mut rows = Vec::new();
    for &target in targets {
        let exact = exact_values(suite, target)?;
        for &method in methods {
            let params = match row_param {
                Some(_) => match (method, target) {
                    (Method::NsOneVar, Target::Sqrt) => Vec::new(),
                    (Method::Mtp | Method::Mpa, _) => vec![DEFAULT_DEGREE],
                    (Method::NsCoupled | Method::NsOneVar, _) => vec![DEFAULT_NS_ITERATIONS],
                    (Method::Spectral, _) => vec![0],
                },
                None => forward_params(method, target),
            };
            for p in params {
                let fc = forward_config(method, target, p);
                let s = score_forward(suite, &exact, &fc)?;
                let time = time_median(cfg.reps, || forward(&suite[0], &fc).map(drop))?;
                rows.push(BenchRecord {
                    sweep: sweep.to_string(),
                    method: method.to_string(),
                    target: target.to_string(),
                    param: row_param.unwrap_or(p as f64),
                    time_ns_mean: time,
                    mae: s.mae,
                    nrmse: s.nrmse,
                    defining_residual: s.residual,
                    matmul_count: s.counters.matmul,
                    solve_count: s.counters.solve,
                });
            }
        }
    }
    Ok(rows)
}

const BOTH: [Target; 2] = [Target::Sqrt, Target::InvSqrt];

/// MTP/MPA degrees 7..17 (odd) and NS iterations 3..7, errors vs the spectral
/// oracle.
pub fn fp_sweep(cfg: &SweepConfig) -> Result<Vec<BenchRecord>> {
    let suite = cfg.suite(cfg.dim)?;
    let methods = cfg.methods_or(&[Method::Mtp, Method::Mpa, Method::NsCoupled]);
    forward_rows(Sweep::Fp, cfg, &suite, &methods, &cfg.targets_or(&BOTH), None)
}

/// MTP-11, MPA-11 and NS-5 at each dimension in 4..128; `param` is the
/// dimension.
pub fn dim_sweep(cfg: &SweepConfig) -> Result<Vec<BenchRecord>> {
    let methods = cfg.methods_or(&[Method::Mtp, Method::Mpa, Method::NsCoupled]);
    let targets = cfg.targets_or(&BOTH);
    let mut rows = Vec::new();
    for dim in DIMS {
        let suite = cfg.suite(dim)?;
        rows.extend(forward_rows(Sweep::Dim, cfg, &suite, &methods, &targets, Some(dim as f64))?);
    }
    Ok(rows)
}

/// Inverse square roots of sample covariances `XXᵀ + εI` of `dim × 8·dim`
/// standard normal data. `defining_residual` is the whitening error.
pub fn whiten_demo(cfg: &SweepConfig) -> Result<Vec<BenchRecord>> {
    let n = cfg.dim;
    let suite: Vec<SymMatrix> = (0..cfg.suite_size)
        .into_par_iter()
        .map(|i| sample_covariance(&random_normal(n, 8 * n, cfg.seed, i as u64), cfg.epsilon))
        .collect::<Result<_>>()?;
    let methods = cfg.methods_or(&[Method::Mtp, Method::Mpa, Method::NsCoupled, Method::NsOneVar, Method::Spectral]);
    forward_rows(Sweep::Whiten, cfg, &suite, &methods, &cfg.targets_or(&[Target::InvSqrt]), None)
}

/// Lyapunov solver for `T` in 5..10 and reverse-mode NS for 3..7 iterations.
///
/// `mae` and `nrmse` compare the gradient with the Bartels–Stewart gradient
/// (`nrmse` is the relative Frobenius error); `defining_residual` carries
/// `residual_b`. The Lyapunov solver starts from the exact forward value so
/// only backward error is measured; reverse-mode NS differentiates its own
/// forward and is only defined for the square root.
pub fn bp_sweep(cfg: &SweepConfig) -> Result<Vec<BenchRecord>> {
    let n = cfg.dim;
    let suite = cfg.suite(n)?;
    let upstream: Vec<Matrix> = (0..cfg.suite_size).map(|i| cfg.upstream(n, i)).collect();
    let methods = cfg.methods_or(&[Method::Mpa, Method::NsCoupled]);
    let mut rows = Vec::new();
    for target in cfg.targets_or(&BOTH) {
        let exact_grad: Vec<Matrix> = suite
            .par_iter()
            .zip(upstream.par_iter())
            .map(|(a, g)| reference_grad(target, a, g))
            .collect::<Result<_>>()?;
        let fwd = exact_values(&suite, target)?;

        if methods.iter().any(|m| matches!(m, Method::Mtp | Method::Mpa | Method::Spectral)) {
            for t in BP_LYAPUNOV_ITERATIONS {
                let request = |i: usize| GradRequest {
                    target,
                    a: suite[i].clone(),
                    forward_value: fwd[i].clone(),
                    upstream: upstream[i].clone(),
                    config: BackwardConfig::with_iterations(t),
                };
                let per_item: Vec<(f64, f64, f64, OpCounters)> = (0..suite.len())
                    .into_par_iter()
                    .map(|i| {
                        let r = lyapunov_grad(&request(i))?;
                        Ok((mae(&r.grad, &exact_grad[i])?, nrmse(&r.grad, &exact_grad[i])?, r.residual_b, r.counters))
                    })
                    .collect::<Result<_>>()?;
                let req0 = request(0);
                let time = time_median(cfg.reps, || lyapunov_grad(&req0).map(drop))?;
                rows.push(grad_row(target, "lya", t, time, &per_item));
            }
        }

        if target == Target::Sqrt && methods.contains(&Method::NsCoupled) {
            for t in BP_NS_ITERATIONS {
                let per_item: Vec<(f64, f64, f64, OpCounters)> = (0..suite.len())
                    .into_par_iter()
                    .map(|i| {
                        let r = ns_backward(&suite[i], &upstream[i], t)?;
                        Ok((mae(&r.grad, &exact_grad[i])?, nrmse(&r.grad, &exact_grad[i])?, r.residual_b, r.counters))
                    })
                    .collect::<Result<_>>()?;
                let time = time_median(cfg.reps, || ns_backward(&suite[0], &upstream[0], t).map(drop))?;
                rows.push(grad_row(target, "ns", t, time, &per_item));
            }
        }
    }
    Ok(rows)
}

fn grad_row(target: Target, method: &str, t: usize, time: f64, per_item: &[(f64, f64, f64, OpCounters)]) -> BenchRecord {
    let col = |k: fn(&(f64, f64, f64, OpCounters)) -> f64| mean(&per_item.iter().map(k).collect::<Vec<_>>());
    BenchRecord {
        sweep: Sweep::Bp.to_string(),
        method: method.to_string(),
        target: target.to_string(),
        param: t as f64,
        time_ns_mean: time,
        mae: col(|r| r.0),
        nrmse: col(|r| r.1),
        defining_residual: col(|r| r.2),
        matmul_count: per_item[0].3.matmul,
        solve_count: per_item[0].3.solve,
    }
}

/// Forward plus backward for one matrix with the method's standard pairing:
/// MTP/MPA with the Lyapunov solver, NS with reverse mode, spectral with
/// Bartels–Stewart. Returns the forward value and the combined counters.
fn forward_backward(a: &SymMatrix, upstream: &Matrix, method: Method, target: Target) -> Result<(SymMatrix, OpCounters)> {
    let fc = forward_config(
        method,
        target,
        match method {
            Method::Mtp | Method::Mpa => DEFAULT_DEGREE,
            _ => DEFAULT_NS_ITERATIONS,
        },
    );
    let fwd = forward(a, &fc)?;
    let mut ops = fwd.counters;
    match method {
        Method::Mtp | Method::Mpa => {
            let r = lyapunov_grad(&GradRequest {
                target,
                a: a.clone(),
                forward_value: fwd.value.clone(),
                upstream: upstream.clone(),
                config: BackwardConfig::with_iterations(DEFAULT_LYAPUNOV_ITERATIONS),
            })?;
            ops += r.counters;
        }
        Method::NsCoupled | Method::NsOneVar => {
            if target == Target::InvSqrt {
                return Err(Error::InvalidArgument(
                    "reverse-mode NS is implemented for the square root only".into(),
                ));
            }
            ops += ns_backward(a, upstream, DEFAULT_NS_ITERATIONS)?.counters;
        }
        Method::Spectral => {
            let s = match target {
                Target::Sqrt => fwd.value.clone(),
                Target::InvSqrt => crate::forward::spectral(a, Target::Sqrt)?.value,
            };
            bartels_stewart_counted(&s, upstream, &mut ops)?;
        }
    }
    Ok((fwd.value, ops))
}

/// Forward plus backward over batches of 1, 4, 16 and 64 matrices.
///
/// Error columns are forward errors over the suite and do not depend on the
/// batch size; the timing column covers the whole batch.
pub fn batch_sweep(cfg: &SweepConfig) -> Result<Vec<BenchRecord>> {
    let n = cfg.dim;
    let sizes: Vec<usize> = match cfg.batch {
        Some(b) => vec![b],
        None => BATCH_SIZES.to_vec(),
    };
    let largest = *sizes.iter().max().expect("non-empty batch list");
    let suite = cfg.suite(n)?;
    let upstream: Vec<Matrix> = (0..cfg.suite_size.max(largest)).map(|i| cfg.upstream(n, i)).collect();
    let batch: Vec<SymMatrix> = (0..largest)
        .into_par_iter()
        .map(|i| if i < suite.len() { Ok(suite[i].clone()) } else { cfg.spd(n, i) })
        .collect::<Result<_>>()?;
    let methods = cfg.methods_or(&[Method::Mpa, Method::Mtp, Method::NsCoupled, Method::Spectral]);

    let mut rows = Vec::new();
    for target in cfg.targets_or(&[Target::Sqrt]) {
        let exact = exact_values(&suite, target)?;
        for &method in &methods {
            let per_item: Vec<(f64, f64, f64, OpCounters)> = (0..suite.len())
                .into_par_iter()
                .map(|i| {
                    let (v, ops) = forward_backward(&suite[i], &upstream[i], method, target)?;
                    Ok((mae(&v, &exact[i])?, nrmse(&v, &exact[i])?, defining_residual(target, &suite[i], &v)?, ops))
                })
                .collect::<Result<_>>()?;
            let col = |k: fn(&(f64, f64, f64, OpCounters)) -> f64| mean(&per_item.iter().map(k).collect::<Vec<_>>());
            for &b in &sizes {
                let time = time_median(cfg.reps, || {
                    for i in 0..b {
                        forward_backward(&batch[i], &upstream[i], method, target)?;
                    }
                    Ok(())
                })?;
                rows.push(BenchRecord {
                    sweep: Sweep::Batch.to_string(),
                    method: method.to_string(),
                    target: target.to_string(),
                    param: b as f64,
                    time_ns_mean: time,
                    mae: col(|r| r.0),
                    nrmse: col(|r| r.1),
                    defining_residual: col(|r| r.2),
                    matmul_count: per_item[0].3.matmul,
                    solve_count: per_item[0].3.solve,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(suite: usize, dim: usize) -> SweepConfig {
        SweepConfig {
            suite_size: suite,
            dim,
            reps: 1,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn scalar_suite_is_exact_for_polynomials() {
        let rows = run_sweep(Sweep::Fp, &small(1, 1)).unwrap();
        for r in rows.iter().filter(|r| r.method == "mtp" || r.method == "mpa") {
            assert!(r.mae < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn fp_rows_are_sorted_and_counted() {
        let rows = run_sweep(Sweep::Fp, &small(2, 6)).unwrap();
        assert_eq!(rows.len(), 2 * (6 + 6 + 5));
        let mut sorted = rows.clone();
        sort_rows(&mut sorted);
        assert_eq!(rows, sorted);
        for r in &rows {
            match r.method.as_str() {
                "mtp" => assert_eq!(r.matmul_count as f64, r.param - 1.0),
                "mpa" => assert_eq!(r.solve_count, 1),
                "ns" => assert_eq!(r.matmul_count as f64, 3.0 * r.param),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn bp_counts() {
        let rows = run_sweep(Sweep::Bp, &small(2, 5)).unwrap();
        for r in rows.iter().filter(|r| r.method == "lya") {
            let t = r.param as u64;
            let want = if r.target == "sqrt" { 6 * t } else { 3 + 6 * t };
            assert_eq!(r.matmul_count, want);
        }
        assert_eq!(rows.iter().filter(|r| r.method == "ns").count(), 5);
    }

    #[test]
    fn batch_shape_and_error_columns() {
        let rows = run_sweep(Sweep::Batch, &small(3, 4)).unwrap();
        assert_eq!(rows.len(), 16);
        for chunk in rows.chunks(4) {
            assert!(chunk.iter().all(|r| r.mae == chunk[0].mae && r.method == chunk[0].method));
        }
    }

    #[test]
    fn whiten_requires_positive_epsilon() {
        let cfg = SweepConfig {
            epsilon: 0.0,
            ..small(1, 3)
        };
        assert!(run_sweep(Sweep::Whiten, &cfg).is_err());
    }

    #[test]
    fn coeff_dump_layout() {
        let rows = coeff_rows(Target::Sqrt, 1, 1).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].kind, rows[0].index), ('p', 1));
        assert!((rows[0].value - 0.75).abs() < 1e-15);
        assert!((rows[1].value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn median_timing() {
        let t = time_median(3, || Ok(())).unwrap();
        assert!(t >= 1.0);
    }
}
