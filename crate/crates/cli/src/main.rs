//! Command-line front end: single solves, noise studies, problem listing and
//! derivative checks.
//!
//! Exit codes: 0 = successful run (convergence, infeasible critical point, or
//! accepted objective value), 1 = unsuccessful run (iteration cap, stall,
//! numerical failure), 2 = usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adswitch_core::solver::{self, SolverConfig};
use adswitch_core::{diagnostics, noise, problems, Error, ProblemInstance, TerminationKind};

#[derive(Parser)]
#[command(name = "adswitch", version, about = "First-order solver for equality-constrained optimization", max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and print a one-line summary:
    /// `name n m f gT_norm c_norm iters exitc`.
    Solve(SolveArgs),
    /// Run the gradient-noise reliability study over problems × levels.
    Study(StudyArgs),
    /// List the registered problems with their dimensions.
    List,
    /// Check analytic derivatives against central finite differences.
    Check(CheckArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Stopping tolerance ε.
    #[arg(long = "eps")]
    eps: Option<f64>,
    /// Iteration cap.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Switching constant β.
    #[arg(long)]
    beta: Option<f64>,
    /// Step scale η.
    #[arg(long)]
    eta: Option<f64>,
    /// Normal-step cap θ.
    #[arg(long)]
    theta: Option<f64>,
    /// Gauss-Newton damping δ.
    #[arg(long)]
    delta: Option<f64>,
    /// AdaGrad offset ς.
    #[arg(long)]
    varsigma: Option<f64>,
}

impl ConfigArgs {
    fn apply(&self, mut config: SolverConfig) -> SolverConfig {
        if let Some(v) = self.eps {
            config.epsilon = v;
        }
        if let Some(v) = self.max_iter {
            config.max_iter = v;
        }
        if let Some(v) = self.beta {
            config.beta = v;
        }
        if let Some(v) = self.eta {
            config.eta = v;
        }
        if let Some(v) = self.theta {
            config.theta = v;
        }
        if let Some(v) = self.delta {
            config.delta = v;
        }
        if let Some(v) = self.varsigma {
            config.varsigma = v;
        }
        config
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Registered problem name (see `list`).
    #[arg(required_unless_present = "manifest")]
    problem: Option<String>,
    /// Load the problem from a JSON manifest instead of the registry.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Write `<name>.csv` (history) and `<name>.json` (report) here.
    /// Defaults to $ADSWITCH_OUT_DIR when set.
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    /// Record f (and ψ with --rho-diag) per iteration.
    #[arg(long)]
    diagnostics: bool,
    /// Penalty ρ for the Lyapunov diagnostic ψ.
    #[arg(long = "rho-diag")]
    rho_diag: Option<f64>,
}

#[derive(Args)]
struct StudyArgs {
    /// Problems to include; all registered problems when omitted.
    problems: Vec<String>,
    /// Relative noise levels.
    #[arg(long, num_args = 1.., default_values_t = [0.05, 0.15, 0.25, 0.50])]
    levels: Vec<f64>,
    /// Independent runs per (problem, level) cell.
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Study seed; run streams are derived from it deterministically.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    config: ConfigArgs,
    /// Write per-level CSV tables and `study.json` here.
    /// Defaults to $ADSWITCH_OUT_DIR when set.
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Problems to check; all registered problems when omitted.
    problems: Vec<String>,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-6)]
    step: f64,
}

/// Scientific notation in the result-table style: signed mantissa for
/// objective values (`-1.000000e+00`), unsigned for norms (`9.64e-07`).
fn fmt_exp(v: f64, digits: usize, signed: bool) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = if signed {
        format!("{v:+.digits$e}")
    } else {
        format!("{v:.digits$e}")
    };
    // Rust renders the exponent as e.g. `e0`/`e-7`; pad to `e+00`/`e-07`.
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, abs) = match exp.strip_prefix('-') {
                Some(rest) => ('-', rest),
                None => ('+', exp),
            };
            format!("{mantissa}e{sign}{abs:0>2}")
        }
        None => s,
    }
}

fn fmt_sci(v: f64, digits: usize) -> String {
    fmt_exp(v, digits, digits >= 6)
}

fn out_dir_or_env(cli_value: Option<PathBuf>) -> Option<PathBuf> {
    cli_value.or_else(|| std::env::var_os("ADSWITCH_OUT_DIR").map(PathBuf::from))
}

fn load_problems(names: &[String]) -> Result<Vec<ProblemInstance>, Error> {
    if names.is_empty() {
        Ok(problems::all_builtins())
    } else {
        names.iter().map(|n| problems::builtin(n)).collect()
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, Error> {
    let problem = match &args.manifest {
        Some(path) => problems::from_manifest_path(path)?,
        None => problems::builtin(args.problem.as_deref().unwrap_or_default())?,
    };
    let mut config = args.config.apply(SolverConfig::default());
    config.diagnostics = args.diagnostics;
    config.rho_diag = args.rho_diag;

    let report = solver::solve(&problem, &config)?;
    let st = &report.status;

    // Mirror the result-table row: infeasible exits carry no meaningful
    // objective or projected gradient.
    let (f_col, gt_col, c_col) = if st.kind == TerminationKind::InfeasibleStationary
        || st.kind == TerminationKind::NumericalFailure
    {
        ("---".to_string(), "---".to_string(), "---".to_string())
    } else {
        let f = match st.f {
            Some(f) => f,
            None => problem.eval_objective(&report.x_final)?,
        };
        (
            fmt_sci(f, 6),
            fmt_sci(st.gt_norm, 2),
            fmt_sci(st.c_norm, 2),
        )
    };
    println!(
        "{} {} {} {} {} {} {} {}",
        problem.name(),
        problem.n(),
        problem.m(),
        f_col,
        gt_col,
        c_col,
        st.k_final,
        st.kind.exit_code_str()
    );

    if let Some(dir) = out_dir_or_env(args.out_dir) {
        ensure_dir(&dir)?;
        diagnostics::write_history_csv(&report, &dir.join(format!("{}.csv", problem.name())))?;
        diagnostics::write_report_json(&report, &dir.join(format!("{}.json", problem.name())))?;
    }

    Ok(if st.kind.is_success() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_study(args: StudyArgs) -> Result<ExitCode, Error> {
    if args.runs < 1 {
        return Err(Error::InvalidConfig("--runs must be at least 1".into()));
    }
    for &level in &args.levels {
        if !(0.0..=1.0).contains(&level) {
            return Err(Error::InvalidConfig(format!(
                "--levels entries must lie in [0,1], got {level}"
            )));
        }
    }
    let problems = load_problems(&args.problems)?;
    let mut config = args.config.apply(SolverConfig::default());
    if args.config.eps.is_none() {
        config.epsilon = 1e-3; // study protocol default
    }

    let summary = noise::run_study(&problems, &args.levels, args.runs, &config, args.seed)?;

    println!("problem      level   success  avg_f           avg_gT    avg_c     avg_its");
    for cell in &summary.cells {
        println!(
            "{:<12} {:<7} {:>2}/{:<5} {:<15} {:<9} {:<9} {}",
            cell.problem,
            cell.level,
            cell.successes,
            cell.runs,
            cell.avg_f.map(|v| fmt_sci(v, 6)).unwrap_or_else(|| "---".into()),
            cell.avg_gt_norm
                .map(|v| fmt_sci(v, 2))
                .unwrap_or_else(|| "---".into()),
            cell.avg_c_norm
                .map(|v| fmt_sci(v, 2))
                .unwrap_or_else(|| "---".into()),
            cell.avg_iters
                .map(|v| format!("{v:.1}"))
                .unwrap_or_else(|| "---".into()),
        );
    }
    println!();
    println!("level  all-runs-failed  all-runs-successful");
    for &level in &args.levels {
        let (failed, ok) = summary.reliability(level);
        println!("{level:<6} {failed:>15} {ok:>20}");
    }

    if let Some(dir) = out_dir_or_env(args.out_dir) {
        ensure_dir(&dir)?;
        for &level in &args.levels {
            noise::write_study_csv(&summary, level, &dir.join(format!("study_level_{level}.csv")))?;
        }
        noise::write_study_json(&summary, &dir.join("study.json"))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_list() -> ExitCode {
    println!("name         n    m");
    for name in problems::builtin_names() {
        let p = problems::builtin(name).expect("registry is total");
        println!("{:<12} {:<4} {}", p.name(), p.n(), p.m());
    }
    ExitCode::SUCCESS
}

fn cmd_check(args: CheckArgs) -> Result<ExitCode, Error> {
    let problems = load_problems(&args.problems)?;
    let mut worst: f64 = 0.0;
    println!("problem      grad_err   jac_err");
    for p in &problems {
        let rep = problems::check_derivatives(p, p.x0(), args.step)?;
        println!(
            "{:<12} {}  {}",
            p.name(),
            fmt_sci(rep.gradient_max_rel_err, 2),
            fmt_sci(rep.jacobian_max_rel_err, 2)
        );
        worst = worst.max(rep.worst());
    }
    Ok(if worst > 1e-4 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Study(args) => cmd_study(args),
        Command::List => Ok(cmd_list()),
        Command::Check(args) => cmd_check(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
