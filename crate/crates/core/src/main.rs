use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;

use matroot::bench::{coeff_rows, run_sweep, write_csv, Sweep, SweepConfig, BENCH_HEADER, COEFF_HEADER};
use matroot::{Error, Method, Result, Target};

/// Benchmark sweeps for matrix square roots and their gradients; writes CSV.
#[derive(Debug, Parser)]
#[command(name = "matroot", version)]
struct Cli {
    /// fp, bp, batch, dim, whiten or coeffs.
    #[arg(long)]
    sweep: String,

    #[arg(long, default_value_t = 64)]
    dim: usize,

    /// Single batch size for the batch sweep (default: 1,4,16,64).
    #[arg(long)]
    batch: Option<usize>,

    #[arg(long, default_value_t = 100)]
    suite_size: usize,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Timing repetitions; the median is reported.
    #[arg(long, default_value_t = 5)]
    reps: usize,

    /// Output path, or `stdout`.
    #[arg(long, default_value = "stdout")]
    out: String,

    /// Comma-separated subset of mtp,mpa,ns,ns1,spectral.
    #[arg(long)]
    methods: Option<String>,

    /// sqrt, isqrt or both (default depends on the sweep).
    #[arg(long)]
    target: Option<String>,

    /// Generator shift (relative) or covariance regularizer (whiten, absolute).
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,

    /// Numerator degree for the coeffs dump.
    #[arg(long, default_value_t = 5)]
    m: usize,

    /// Denominator degree for the coeffs dump.
    #[arg(long, default_value_t = 5)]
    n: usize,
}

fn parse_targets(s: &str) -> Result<Vec<Target>> {
    match s.to_ascii_lowercase().as_str() {
        "both" => Ok(vec![Target::Sqrt, Target::InvSqrt]),
        other => Ok(vec![other.parse()?]),
    }
}

fn parse_methods(s: &str) -> Result<Vec<Method>> {
    s.split(',').map(|m| m.trim().parse()).collect()
}

fn run(cli: Cli) -> Result<()> {
    let sweep: Sweep = cli.sweep.parse()?;
    let targets = cli.target.as_deref().map(parse_targets).transpose()?;
    let mut out: Box<dyn Write> = if cli.out == "stdout" || cli.out == "-" {
        Box::new(BufWriter::new(io::stdout().lock()))
    } else {
        let f = File::create(&cli.out).map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", cli.out)))?;
        Box::new(BufWriter::new(f))
    };
    let io_err = |e: io::Error| Error::InvalidArgument(format!("write failed: {e}"));

    if sweep == Sweep::Coeffs {
        let mut rows = Vec::new();
        for t in targets.unwrap_or_else(|| vec![Target::Sqrt]) {
            rows.extend(coeff_rows(t, cli.m, cli.n)?);
        }
        if rows.is_empty() {
            writeln!(out, "{COEFF_HEADER}").map_err(io_err)?;
        }
        return write_csv(&rows, out);
    }

    let cfg = SweepConfig {
        suite_size: cli.suite_size,
        dim: cli.dim,
        batch: cli.batch,
        seed: cli.seed,
        reps: cli.reps,
        methods: cli.methods.as_deref().map(parse_methods).transpose()?,
        targets,
        epsilon: cli.epsilon,
    };
    let rows = run_sweep(sweep, &cfg)?;
    if rows.is_empty() {
        writeln!(out, "{BENCH_HEADER}").map_err(io_err)?;
        return out.flush().map_err(io_err);
    }
    write_csv(&rows, out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let msg: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("matroot: {}", msg.join(" ").trim_start_matches("error: "));
            return ExitCode::FAILURE;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("matroot: {e}");
            ExitCode::FAILURE
        }
    }
}
