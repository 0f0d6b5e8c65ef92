use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gtep::benders::{evaluate_plan, run_with_observer, BendersError};
use gtep::inflow::fit_ar1;
use gtep::io::{
    convergence_table, dispatch_table, inflow_to_toml, load_case, load_plan, marginal_cost_table, read_history,
    write_reports, IoError, ReportBundle,
};
use gtep::solver::ReferenceSolver;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "gtep", version, about = "Generation and transmission expansion planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan expansion for a case and write the report bundle.
    Run {
        case: PathBuf,
        /// Target relative gap.
        #[arg(long)]
        gap: Option<f64>,
        #[arg(long = "max-iter")]
        max_iter: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: $GTEP_OUT_DIR or ./gtep-out).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Load and validate a case file.
    Validate { case: PathBuf },
    /// Simulate operation under a fixed plan.
    Simulate {
        case: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write dispatch and marginal cost tables here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Fit periodic AR(1) inflow parameters to a history table.
    FitInflows {
        history: PathBuf,
        #[arg(long, default_value_t = 12)]
        periods: usize,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure {
            code: EXIT_DATA,
            message: e.to_string(),
        }
    }
}

impl From<BendersError> for Failure {
    fn from(e: BendersError) -> Self {
        Failure {
            code: if e.is_solver_failure() { EXIT_SOLVER } else { EXIT_DATA },
            message: e.to_string(),
        }
    }
}

fn out_dir(out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| std::env::var_os("GTEP_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("gtep-out"))
}

fn io_fail(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_DATA,
        message: format!("{}: {e}", path.display()),
    }
}

fn cmd_run(
    case: &Path,
    gap: Option<f64>,
    max_iter: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    workers: Option<usize>,
) -> Result<(), Failure> {
    let (case, mut cfg) = load_case(case)?;
    if let Some(g) = gap {
        if !(g > 0.0 && g < 1.0) {
            return Err(Failure {
                code: EXIT_USAGE,
                message: "--gap must lie in (0, 1)".into(),
            });
        }
        cfg.gap = g;
    }
    if let Some(n) = max_iter {
        cfg.max_iterations = n;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    let dir = out_dir(out);
    fs::create_dir_all(&dir).map_err(|e| io_fail(&dir, e))?;
    let log_path = dir.join("convergence.csv");
    fs::write(&log_path, "").map_err(|e| io_fail(&log_path, e))?;
    let mut history = Vec::new();
    let result = run_with_observer(&case, &cfg, &ReferenceSolver::default(), |rec, _| {
        history.push(rec.clone());
        if let Ok(csv) = convergence_table(&history).to_csv() {
            let _ = fs::write(&log_path, csv);
        }
        eprintln!(
            "iteration {:>3}  LB {:.6e}  UB {:.6e}  gap {:.4}",
            rec.iteration, rec.lower_bound, rec.upper_bound, rec.gap
        );
    })?;
    let bundle = ReportBundle::new(&case, &result, &cfg);
    write_reports(&dir, &bundle)?;
    print!("{}", bundle.summary);
    Ok(())
}

fn cmd_simulate(
    case: &Path,
    plan: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    workers: Option<usize>,
) -> Result<(), Failure> {
    let (case, mut cfg) = load_case(case)?;
    let plan = load_plan(plan, &case)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(w) = workers {
        cfg.workers = w;
    }
    let investment = plan.investment_cost(&case).map_err(BendersError::from)?;
    let op = evaluate_plan(&case, &plan, &cfg, &ReferenceSolver::default())?;
    let sim = &op.simulation;
    println!("investment_cost = {}", investment);
    println!("operation_cost = {}", sim.mean);
    println!("operation_std_dev = {}", sim.std_dev);
    println!("lower_bound = {}", sim.lower);
    println!("sddp_iterations = {}", op.iterations);
    println!("sddp_converged = {}", op.converged);
    if let Some(dir) = out {
        fs::create_dir_all(&dir).map_err(|e| io_fail(&dir, e))?;
        for (name, table) in [
            ("dispatch.csv", dispatch_table(&case, sim)),
            ("marginal_cost.csv", marginal_cost_table(&case, sim)),
        ] {
            let path = dir.join(name);
            fs::write(&path, table.to_csv()?).map_err(|e| io_fail(&path, e))?;
        }
    }
    Ok(())
}

fn cmd_fit(history: &Path, periods: usize) -> Result<(), Failure> {
    let (ids, data) = read_history(history)?;
    let report = fit_ar1(&data, periods).map_err(|e| Failure {
        code: EXIT_DATA,
        message: e.to_string(),
    })?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let mut stdout = std::io::stdout();
    let _ = stdout.write_all(inflow_to_toml(&report.model, &ids).as_bytes());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run {
            case,
            gap,
            max_iter,
            seed,
            out,
            workers,
        } => cmd_run(&case, gap, max_iter, seed, out, workers),
        Command::Validate { case } => load_case(&case).map(|(c, _)| println!("{}: ok", c.name)).map_err(Failure::from),
        Command::Simulate {
            case,
            plan,
            seed,
            out,
            workers,
        } => cmd_simulate(&case, &plan, seed, out, workers),
        Command::FitInflows { history, periods } => cmd_fit(&history, periods),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
