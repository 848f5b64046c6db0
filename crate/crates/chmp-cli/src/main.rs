//! `chmp`: generate hull-membership instances, run solver sweeps, decide LP
//! feasibility, and classify by witness distance.
//!
//! Exit codes: 0 = epsilon solution (or generic success), 2 = proof that p is
//! outside (witness or gap; for lpfeas: infeasible), 3 = iteration budget
//! exhausted (lpfeas: inconclusive), 1 = error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use chmp_core::classify::{accuracy_report, load_idx_images, load_idx_labels, LabeledPointSet};
use chmp_core::geometry::{build_query, SolveOutcome};
use chmp_core::instance::{read_instance, write_instance, InstanceCase, InstanceSpec};
use chmp_core::lp::{gen_lp_instance, read_lp, solve_feasibility, write_lp, FeasibilityVerdict};
use chmp_core::solvers::{default_maxit, solve, SolverConfig, SolverKind};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chmp", version, about = "Convex hull membership toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Args)]
struct GlobalOpts {
    /// Base RNG seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative tolerance. Falls back to $CHMP_DEFAULT_EPS, then 1e-4
    /// (lpfeas: 1e-6).
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Iteration cap. Default: min(max(1000 n, 10^4), 10^6).
    #[arg(long, global = true)]
    maxit: Option<usize>,
    /// Record per-step diagnostics and print a trace summary.
    #[arg(long, global = true)]
    trace: bool,
    /// Independent solves run on this many threads.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Output file (subcommand-dependent: instance, CSV, or report).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file (columns A and query p).
    Gen(GenArgs),
    /// Solve one instance file and print a summary.
    Solve(SolveArgs),
    /// Run a solver sweep and emit one CSV row per solve.
    Bench(BenchArgs),
    /// Decide LP feasibility through the hull embedding.
    Lpfeas(LpArgs),
    /// Classify IDX-format images by witness distance to each class hull.
    Classify(ClassifyArgs),
}

#[derive(Args)]
struct GenArgs {
    /// a | b | c | d | square-inside | square-outside
    #[arg(long)]
    case: InstanceCase,
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 1000)]
    n: usize,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file written by `chmp gen`.
    input: PathBuf,
    #[arg(long, default_value = "ta")]
    solver: SolverKind,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    case: InstanceCase,
    #[arg(long, default_value_t = 100)]
    m: usize,
    /// Comma-separated list of column counts.
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    n: Vec<usize>,
    /// Instances per (case, n) cell.
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Comma-separated solver list.
    #[arg(long, value_delimiter = ',', default_value = "ta,gt,fw,asfw,spg")]
    solvers: Vec<SolverKind>,
}

#[derive(Args)]
struct LpArgs {
    /// LPF file; omitted means generate an instance instead.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    m: usize,
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Box bound N on e'x.
    #[arg(long, default_value_t = 1200.0)]
    nbound: f64,
    /// Generate the right-hand side with no exact solution.
    #[arg(long)]
    infeasible: bool,
    #[arg(long, default_value = "gt")]
    solver: SolverKind,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    train_images: PathBuf,
    #[arg(long)]
    train_labels: PathBuf,
    #[arg(long)]
    test_images: PathBuf,
    #[arg(long)]
    test_labels: PathBuf,
    /// Cap on training samples read from the file head.
    #[arg(long, default_value_t = 10_000)]
    train_limit: usize,
    /// Cap on test samples.
    #[arg(long, default_value_t = 200)]
    test_limit: usize,
    #[arg(long, default_value = "ta")]
    solver: SolverKind,
}

fn main() -> ExitCode {
    // Exit 2 is reserved for "p proved outside"; usage errors exit 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Gen(args) => cmd_gen(args, &cli.global),
        Command::Solve(args) => cmd_solve(args, &cli.global),
        Command::Bench(args) => cmd_bench(args, &cli.global),
        Command::Lpfeas(args) => cmd_lpfeas(args, &cli.global),
        Command::Classify(args) => cmd_classify(args, &cli.global),
    }
}

/// --eps beats the environment default beats the built-in fallback.
fn resolve_eps(global: &GlobalOpts, fallback: f64) -> Result<f64> {
    if let Some(eps) = global.eps {
        return Ok(eps);
    }
    match std::env::var("CHMP_DEFAULT_EPS") {
        Ok(raw) => raw
            .parse::<f64>()
            .with_context(|| format!("CHMP_DEFAULT_EPS = {raw:?} is not a float")),
        Err(_) => Ok(fallback),
    }
}

fn build_config(global: &GlobalOpts, n: usize, eps_fallback: f64) -> Result<SolverConfig<f64>> {
    let mut cfg = SolverConfig::new(n);
    cfg.eps = resolve_eps(global, eps_fallback)?;
    cfg.maxit = global.maxit.unwrap_or_else(|| default_maxit(n));
    cfg.trace = global.trace;
    cfg.seed = global.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code(outcome: &SolveOutcome<f64>) -> u8 {
    match outcome {
        SolveOutcome::EpsilonSolution { .. } => 0,
        SolveOutcome::Witness { .. } | SolveOutcome::GapCertificate { .. } => 2,
        SolveOutcome::Exhausted { .. } => 3,
    }
}

fn open_out(path: &Path) -> Result<BufWriter<File>> {
    let file =
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn cmd_gen(args: &GenArgs, global: &GlobalOpts) -> Result<u8> {
    let spec = InstanceSpec::<f64>::new(args.case, args.m, args.n, global.seed);
    let (a, p) = spec.generate()?;
    match &global.out {
        Some(path) => {
            let mut out = open_out(path)?;
            write_instance(&mut out, &a, &p)?;
            out.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            write_instance(&mut out, &a, &p)?;
        }
    }
    Ok(0)
}

fn cmd_solve(args: &SolveArgs, global: &GlobalOpts) -> Result<u8> {
    let file = File::open(&args.input)
        .with_context(|| format!("cannot open {}", args.input.display()))?;
    let (a, p) = read_instance::<f64, _>(BufReader::new(file))?;
    let cfg = build_config(global, a.n(), 1e-4)?;
    let q = build_query(&a, &p)?;
    let report = solve(&a, &q, args.solver, &cfg)?;
    let delta = report.outcome.delta(&q);

    println!("solver     {}", args.solver);
    println!("outcome    {}", report.outcome.kind());
    println!("iterations {}", report.iterations);
    match &report.outcome {
        SolveOutcome::Witness { certificate } => {
            println!("distance   {:e}", certificate.distance());
        }
        SolveOutcome::GapCertificate { gap, .. } => {
            println!("delta      {delta:e}");
            println!("gap        {gap:e}");
        }
        _ => println!("delta      {delta:e}"),
    }
    println!("time_s     {:.6}", report.wall_time);
    if let Some(trace) = &report.trace {
        println!("trace      {} steps recorded", trace.len());
    }

    if let Some(path) = &global.out {
        let mut out = open_out(path)?;
        writeln!(out, "case,m,n,solver,seed,iterations,outcome,delta,time_s")?;
        let stem = args.input.file_stem().and_then(|s| s.to_str()).unwrap_or("instance");
        writeln!(
            out,
            "{stem},{},{},{},{},{},{},{:e},{:.6}",
            a.m(),
            a.n(),
            args.solver,
            cfg.seed,
            report.iterations,
            report.outcome.kind(),
            delta,
            report.wall_time
        )?;
        out.flush()?;
    }
    Ok(exit_code(&report.outcome))
}

fn cmd_bench(args: &BenchArgs, global: &GlobalOpts) -> Result<u8> {
    if args.reps == 0 {
        bail!("--reps must be at least 1");
    }
    if args.n.is_empty() {
        bail!("--n must list at least one column count");
    }
    if args.solvers.is_empty() {
        bail!("--solvers must list at least one solver");
    }
    let eps = resolve_eps(global, 1e-4)?;

    // Instance seeds are seed + index in (n, rep) order, so any CSV row can
    // be reproduced by `chmp solve` on a regenerated instance.
    struct Task {
        n: usize,
        seed: u64,
        solver: SolverKind,
    }
    let mut tasks = Vec::new();
    let mut index = 0u64;
    for &n in &args.n {
        for _ in 0..args.reps {
            let seed = global.seed + index;
            index += 1;
            for &solver in &args.solvers {
                tasks.push(Task { n, seed, solver });
            }
        }
    }

    let jobs = global.jobs.max(1).min(tasks.len());
    let cursor = AtomicUsize::new(0);
    let rows: Mutex<Vec<(usize, String)>> = Mutex::new(Vec::with_capacity(tasks.len()));
    let failure: Mutex<Option<anyhow::Error>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let t = cursor.fetch_add(1, Ordering::Relaxed);
                if t >= tasks.len() {
                    break;
                }
                let task = &tasks[t];
                let row = (|| -> Result<String> {
                    let spec =
                        InstanceSpec::<f64>::new(args.case, args.m, task.n, task.seed);
                    let (a, p) = spec.generate()?;
                    let mut cfg = SolverConfig::new(a.n());
                    cfg.eps = eps;
                    cfg.maxit = global.maxit.unwrap_or_else(|| default_maxit(a.n()));
                    cfg.seed = task.seed;
                    let q = build_query(&a, &p)?;
                    let report = solve(&a, &q, task.solver, &cfg)?;
                    Ok(format!(
                        "{},{},{},{},{},{},{},{:e},{:.6}",
                        args.case.name(),
                        args.m,
                        task.n,
                        task.solver,
                        task.seed,
                        report.iterations,
                        report.outcome.kind(),
                        report.outcome.delta(&q),
                        report.wall_time
                    ))
                })();
                match row {
                    Ok(row) => rows.lock().unwrap().push((t, row)),
                    Err(err) => {
                        failure.lock().unwrap().get_or_insert(err);
                        break;
                    }
                }
            });
        }
    });
    if let Some(err) = failure.into_inner().unwrap() {
        return Err(err);
    }

    let mut rows = rows.into_inner().unwrap();
    rows.sort_by_key(|(t, _)| *t);
    let header = "case,m,n,solver,seed,iterations,outcome,delta,time_s";
    match &global.out {
        Some(path) => {
            let mut out = open_out(path)?;
            writeln!(out, "{header}")?;
            for (_, row) in &rows {
                writeln!(out, "{row}")?;
            }
            out.flush()?;
        }
        None => {
            println!("{header}");
            for (_, row) in &rows {
                println!("{row}");
            }
        }
    }
    Ok(0)
}

fn cmd_lpfeas(args: &LpArgs, global: &GlobalOpts) -> Result<u8> {
    let lp = match &args.input {
        Some(path) => {
            let file =
                File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            read_lp::<f64, _>(BufReader::new(file))?
        }
        None => {
            let mut rng = chmp_core::PortableRng::new(global.seed);
            let lp =
                gen_lp_instance::<f64>(args.m, args.n, !args.infeasible, args.nbound, &mut rng)?;
            if let Some(path) = &global.out {
                let mut out = open_out(path)?;
                write_lp(&mut out, &lp)?;
                out.flush()?;
            }
            lp
        }
    };

    // Embedded hull has n+2 columns; the sweep parameters widen the spectral
    // bounds and memory because the embedding is badly scaled (diameter > N).
    let mut cfg = build_config(global, lp.n() + 2, 1e-6)?;
    cfg.maxit = global.maxit.unwrap_or(1_000_000);
    cfg.spg.memory = 60;
    cfg.spg.lambda_min = 1e-10;
    cfg.spg.lambda_max = 1e10;
    cfg.validate()?;

    let (verdict, report) = solve_feasibility(&lp, args.solver, &cfg)?;
    println!("solver     {}", args.solver);
    println!("verdict    {}", verdict.kind());
    println!("iterations {}", report.iterations);
    match &verdict {
        FeasibilityVerdict::Feasible { recovery } => {
            println!("residual   {:e} (bound {:e})", recovery.residual, recovery.scaled_bound);
            println!("mass       {:e} (bound {:e})", recovery.mass_defect, recovery.scaled_bound);
            println!("gamma      {:e} (defect bound {:e})", recovery.gamma, recovery.gamma_bound);
        }
        FeasibilityVerdict::Infeasible { certificate } => {
            println!("witness    {:e}", certificate.distance());
        }
        FeasibilityVerdict::Inconclusive { gap } => {
            if let Some(gap) = gap {
                println!("gap        {gap:e}");
            }
        }
    }
    println!("time_s     {:.6}", report.wall_time);
    Ok(match verdict {
        FeasibilityVerdict::Feasible { .. } => 0,
        FeasibilityVerdict::Infeasible { .. } => 2,
        FeasibilityVerdict::Inconclusive { .. } => 3,
    })
}

fn cmd_classify(args: &ClassifyArgs, global: &GlobalOpts) -> Result<u8> {
    let open = |path: &Path| -> Result<BufReader<File>> {
        Ok(BufReader::new(
            File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
        ))
    };
    let train_points =
        load_idx_images::<f64, _>(open(&args.train_images)?, args.train_limit)?;
    let train_labels = load_idx_labels(open(&args.train_labels)?, args.train_limit)?;
    let training = LabeledPointSet::new(&train_points, &train_labels)?;
    let test_points = load_idx_images::<f64, _>(open(&args.test_images)?, args.test_limit)?;
    let test_labels = load_idx_labels(open(&args.test_labels)?, args.test_limit)?;

    let mut cfg = build_config(global, training.class_count().max(1), 1e-4)?;
    cfg.maxit = global.maxit.unwrap_or_else(|| default_maxit(train_points.n()));
    // Short nonmonotone memory: classification solves are many and shallow.
    cfg.spg.memory = 3;
    cfg.validate()?;

    let report = accuracy_report(
        &training,
        &test_points,
        &test_labels,
        args.solver,
        &cfg,
        global.jobs.max(1),
    )?;
    println!(
        "accuracy   {:.4} ({}/{} test points, {} classes)",
        report.accuracy(),
        report.correct,
        report.records.len(),
        training.class_count(),
    );
    if let Some(path) = &global.out {
        let mut out = open_out(path)?;
        report.write_csv(&mut out)?;
        out.flush()?;
    }
    Ok(0)
}
