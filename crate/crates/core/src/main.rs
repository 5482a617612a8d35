use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::warn;
use serde::Serialize;

use mipm::bench::{run_bench, write_bench_csv, BenchOptions};
use mipm::config::{DiagnosticsLevel, SolverConfig};
use mipm::diagnostics::verify::{run_verify, VerifyOptions};
use mipm::diagnostics::{emit_trace, RunSummary, StepTrace};
use mipm::instances::{generate, BMode, Family, InstanceSpec};
use mipm::io::{read_matrix_market, read_vector, write_matrix_market, write_vector};
use mipm::linalg::CertifiedMatrix;
use mipm::quadratic::{qo_solve, regularize, RegularizeMode};
use mipm::scaling::ms_solve;
use mipm::{Error, Result};

#[derive(Parser)]
#[command(name = "mipm", version, about = "Interior point solvers for M-matrix scaling and quadratic programs")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scale a symmetric M-matrix so that X A X 1 = 1.
    Scale {
        matrix: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Minimize 1/2 x^T A x - b^T x over x >= 0.
    Qp {
        matrix: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Compare adaptive and fixed short-step iteration counts.
    Bench {
        /// Comma-separated instance families.
        #[arg(long, value_delimiter = ',', default_value = "grid-laplacian")]
        family: Vec<Family>,
        /// Comma-separated sizes.
        #[arg(long, value_delimiter = ',', default_value = "64,128,256,512,1024")]
        n: Vec<usize>,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seed: Vec<u64>,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Identity shift for Laplacian families.
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        #[arg(long)]
        no_baseline: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized property sweeps.
    Verify {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        max_n: usize,
        /// Flip the pointwise stability inequality (negative control).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Write a generated instance as Matrix Market plus a vector file.
    Gen {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        #[arg(long, default_value = "scaled-random")]
        b_mode: BMode,
        #[arg(long, default_value_t = 1.0)]
        b_norm: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        b_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    eps: Option<f64>,
    /// JSON configuration; explicit flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Per-iteration trace CSV. A config snapshot is written next to it.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Solution vector output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON run summary output.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Add a small identity shift before solving.
    #[arg(long)]
    regularize: bool,
    #[arg(long)]
    diagnostics: Option<DiagnosticsLevel>,
}

impl SolveArgs {
    fn config(&self) -> Result<SolverConfig> {
        let mut cfg = match &self.config {
            Some(p) => SolverConfig::from_json_file(p)?,
            None => SolverConfig::default(),
        };
        if let Some(e) = self.eps {
            cfg.epsilon = e;
        }
        if let Some(d) = self.diagnostics {
            cfg.diagnostics_level = d;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn write_trace(&self, trace: &[StepTrace], cfg: &SolverConfig) -> Result<()> {
        if let Some(path) = &self.trace {
            emit_trace(trace, path)?;
            std::fs::write(snapshot_path(path), cfg.to_json())?;
        }
        Ok(())
    }
}

fn snapshot_path(trace: &Path) -> PathBuf {
    let mut name = trace.file_name().unwrap_or_default().to_os_string();
    name.push(".config.json");
    trace.with_file_name(name)
}

#[derive(Serialize)]
struct ScaleSummary<'a> {
    n: usize,
    epsilon: f64,
    gamma: f64,
    residual: f64,
    final_mu: f64,
    iterations: usize,
    phases: usize,
    solves: usize,
    cg_iterations: usize,
    diagnostics: &'a RunSummary,
}

#[derive(Serialize)]
struct QpSummary<'a> {
    n: usize,
    epsilon: f64,
    gamma: f64,
    objective: f64,
    final_mu: f64,
    gap_bound: f64,
    duality_gap: f64,
    iterations: usize,
    init_iterations: usize,
    solves: usize,
    cg_iterations: usize,
    diagnostics: &'a RunSummary,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(f, value).map_err(|e| Error::Io(e.into()))
}

fn report_violations(summary: &RunSummary) {
    for (id, s) in &summary.lemmas {
        if s.hard > 0 {
            warn!("{id}: {} of {} checks above tolerance (max {:e})", s.hard, s.checks, s.max_magnitude);
        }
    }
}

fn cmd_scale(matrix: &Path, args: &SolveArgs) -> Result<ExitCode> {
    let cfg = args.config()?;
    let a = CertifiedMatrix::new(read_matrix_market(matrix)?)?;
    let (a, gamma) = if args.regularize {
        regularize(&a, &[], cfg.epsilon, RegularizeMode::Scaling)
    } else {
        (a, 0.0)
    };
    let r = ms_solve(&a, cfg.epsilon, &cfg)?;
    args.write_trace(&r.trace, &cfg)?;
    if let Some(out) = &args.out {
        write_vector(out, &r.x_scaled)?;
    }
    if let Some(path) = &args.summary {
        write_json(
            path,
            &ScaleSummary {
                n: a.n(),
                epsilon: cfg.epsilon,
                gamma,
                residual: r.residual_l2,
                final_mu: r.final_mu,
                iterations: r.iterations,
                phases: r.phases.len(),
                solves: r.stats.solves,
                cg_iterations: r.stats.cg_iterations,
                diagnostics: &r.summary,
            },
        )?;
    }
    report_violations(&r.summary);
    println!("residual {:.6e}", r.residual_l2);
    println!("iterations {}", r.iterations);
    if gamma > 0.0 {
        println!("gamma {gamma:.6e}");
    }
    Ok(if r.residual_l2 <= cfg.epsilon {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_qp(matrix: &Path, b_path: &Path, args: &SolveArgs) -> Result<ExitCode> {
    let cfg = args.config()?;
    let a = CertifiedMatrix::new(read_matrix_market(matrix)?)?;
    let b = read_vector(b_path)?;
    let (a, gamma) = if args.regularize {
        regularize(&a, &b, cfg.epsilon, RegularizeMode::Qo)
    } else {
        (a, 0.0)
    };
    let r = qo_solve(&a, &b, cfg.epsilon, &cfg)?;
    args.write_trace(&r.trace, &cfg)?;
    if let Some(out) = &args.out {
        write_vector(out, &r.x)?;
    }
    if let Some(path) = &args.summary {
        write_json(
            path,
            &QpSummary {
                n: a.n(),
                epsilon: cfg.epsilon,
                gamma,
                objective: r.objective,
                final_mu: r.final_mu,
                gap_bound: r.duality_gap_bound,
                duality_gap: r.duality_gap,
                iterations: r.iterations,
                init_iterations: r.init_iterations,
                solves: r.stats.solves,
                cg_iterations: r.stats.cg_iterations,
                diagnostics: &r.summary,
            },
        )?;
    }
    report_violations(&r.summary);
    println!("objective {:.16e}", r.objective);
    println!("gap_bound {:.6e}", r.duality_gap_bound);
    println!("iterations {}", r.iterations);
    if gamma > 0.0 {
        println!("gamma {gamma:.6e}");
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    match cli.command {
        Command::Scale { matrix, solve } => cmd_scale(&matrix, &solve),
        Command::Qp { matrix, b, solve } => cmd_qp(&matrix, &b, &solve),
        Command::Bench {
            family,
            n,
            seed,
            eps,
            gamma,
            no_baseline,
            config,
            out,
        } => {
            let cfg = match config {
                Some(p) => SolverConfig::from_json_file(p)?,
                None => SolverConfig::default(),
            };
            let opts = BenchOptions {
                families: family,
                sizes: n,
                seeds: seed,
                epsilon: eps,
                gamma,
                skip_baseline: no_baseline,
                parallel: true,
            };
            let report = run_bench(&opts, &cfg)?;
            match out {
                Some(p) => write_bench_csv(&report, BufWriter::new(File::create(p)?))?,
                None => write_bench_csv(&report, std::io::stdout().lock())?,
            }
            println!("fitted_exponent {:.4}", report.fitted_exponent);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            trials,
            seed,
            max_n,
            inject_fault,
        } => {
            let report = run_verify(&VerifyOptions {
                trials,
                seed,
                max_n,
                inject_fault,
            })?;
            for (id, s) in &report.lemmas {
                println!(
                    "{:<28} checks {:>6}  max {:.3e}  violations {}",
                    id.name(),
                    s.checks,
                    s.max_magnitude,
                    s.hard
                );
            }
            println!(
                "hand-check lhs {:.6} rhs {:.6}",
                report.hand_check.0, report.hand_check.1
            );
            let bad = report.hard_violations();
            println!("violations {bad}");
            Ok(if bad == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Gen {
            family,
            n,
            seed,
            gamma,
            b_mode,
            b_norm,
            out,
            b_out,
        } => {
            let spec = InstanceSpec {
                gamma,
                b_mode,
                b_norm,
                ..InstanceSpec::new(family, n, seed)
            };
            let (a, b) = generate(&spec)?;
            write_matrix_market(&out, a.matrix())?;
            if let Some(p) = b_out {
                write_vector(p, &b)?;
            }
            println!("n {}", a.n());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
