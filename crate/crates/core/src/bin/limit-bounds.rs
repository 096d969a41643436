//! `limit-bounds`: certified bounds for critical load factors.
//!
//! Exit codes: 0 ok, 2 input error, 3 oracle or assertion failure, 4 solver
//! non-convergence.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use limit_bounds::ext::ExtReal;
use limit_bounds::mech::{dual_delamination_check, DualCheck, ModelFile, ModelKind};
use limit_bounds::oracle::run_oracle_suite;
use limit_bounds::regularizer::{fmt12, write_path_csv, write_path_dat, PsiOptions};
use limit_bounds::report::{run_sweep, solve, SolveOptions, MONOTONE_SLACK};
use limit_bounds::saddle::file::{load_problem, sha256_hex, ProblemFile};
use limit_bounds::{DiscreteSaddleProblem, Error, Result};

#[derive(Parser)]
#[command(name = "limit-bounds", version, about = "Lower and upper bounds for critical load factors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// α-continuation, bisection for ζ* and the majorant; writes bounds.json, path.csv, path.dat.
    Solve {
        /// Problem file or model file (a JSON object with a "kind" key).
        input: PathBuf,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(long)]
        tol_phi: Option<f64>,
        #[arg(long)]
        tol_lambda: Option<f64>,
        /// Continuum inf-sup constant; replaces the discrete estimate.
        #[arg(long = "continuum-Cstar")]
        continuum_c_star: Option<f64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Brute-force duality checks on a tiny problem file.
    Oracle {
        problem: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// ψ(α) and λ_α along the schedule; writes path.csv and path.dat.
    Sweep {
        input: PathBuf,
        #[command(flatten)]
        schedule: ScheduleArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct ScheduleArgs {
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    growth: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Solve the α-steps independently on all cores (no warm starts).
    #[arg(long)]
    parallel_sweep: bool,
}

impl ScheduleArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            alpha0: self.alpha0,
            growth: self.growth,
            steps: self.steps,
            parallel_sweep: self.parallel_sweep,
            psi: PsiOptions::default(),
            ..Default::default()
        }
    }
}

/// A loaded input: the problem, its file hash, and the model when the input was one.
struct Input {
    problem: DiscreteSaddleProblem,
    hash: String,
    model: Option<limit_bounds::mech::FemModel>,
}

fn load_input(path: &Path) -> Result<Input> {
    let bytes = std::fs::read(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_slice(&bytes).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if value.get("kind").is_some() {
        let text = String::from_utf8_lossy(&bytes);
        let base = path.parent().unwrap_or(Path::new("."));
        let model = ModelFile::parse(&text)?.into_model(base)?;
        let problem = model.assemble()?.problem;
        return Ok(Input { problem, hash: sha256_hex(&bytes), model: Some(model) });
    }
    let (problem, hash) = load_problem(path)?;
    Ok(Input { problem, hash, model: None })
}

fn exit_code(e: &Error) -> u8 {
    if e.is_input_error() || matches!(e, Error::Csv(_)) {
        2
    } else if matches!(e, Error::OracleContradiction(_)) {
        3
    } else {
        4
    }
}

#[derive(Serialize)]
struct ModelCheck {
    kind: ModelKind,
    closed_form: Option<ExtReal>,
    dual_check: Option<DualCheck>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn cmd_solve(input: &Path, opts: SolveOptions, out_dir: &Path) -> Result<u8> {
    let inp = load_input(input)?;
    std::fs::create_dir_all(out_dir)?;
    if let Some(c) = opts.continuum_c_star {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidProblem(format!("--continuum-Cstar must be positive, got {c}")));
        }
    }
    opts.schedule(&inp.problem).validate()?;
    let (report, path) = solve(&inp.problem, &opts, Some(inp.hash))?;
    report.write_json(&out_dir.join("bounds.json"))?;
    write_path_csv(&out_dir.join("path.csv"), &path.records)?;
    write_path_dat(&out_dir.join("path.dat"), &path.records)?;
    print!("{}", report.summary());
    if let Some(model) = &inp.model {
        let mut check = ModelCheck { kind: model.kind, closed_form: None, dual_check: None };
        if model.kind == ModelKind::Delamination {
            let cf = model.delamination_closed_form()?;
            println!("closed form              : {}", cf.finite().map_or("+inf".into(), fmt12));
            if let Some(rec) = path.last_converged() {
                check.dual_check = Some(dual_delamination_check(&inp.problem, report.zeta_bisect, &rec.y_alpha)?);
            }
            check.closed_form = Some(cf);
        }
        write_json(&out_dir.join("model.json"), &check)?;
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(if report.unconverged_steps == path.records.len() { 4 } else { 0 })
}

fn cmd_sweep(input: &Path, opts: SolveOptions, out_dir: &Path) -> Result<u8> {
    let inp = load_input(input)?;
    std::fs::create_dir_all(out_dir)?;
    let (_, path) = run_sweep(&inp.problem, &opts)?;
    write_path_csv(&out_dir.join("path.csv"), &path.records)?;
    write_path_dat(&out_dir.join("path.dat"), &path.records)?;
    println!("# alpha psi lambda_alpha converged");
    for r in &path.records {
        println!("{} {} {} {}", fmt12(r.alpha), fmt12(r.psi), fmt12(r.lambda_alpha), r.converged);
    }
    let violations = path.monotonicity_violations(MONOTONE_SLACK);
    if !violations.is_empty() {
        eprintln!("warning: ψ decreased beyond {MONOTONE_SLACK:e} at steps {violations:?}");
    }
    match path.best_lower_bound() {
        Some(l) => println!("lower bound: {}", fmt12(l)),
        None => {
            eprintln!("error: no α-step converged");
            return Ok(4);
        }
    }
    Ok(0)
}

fn cmd_oracle(problem: &Path, out_dir: &Path) -> Result<u8> {
    let (p, _) = load_problem(problem)?;
    let report = run_oracle_suite(&p)?;
    let ext = |v: ExtReal| v.finite().map_or("+inf".to_string(), fmt12);
    println!("hypothesis   : {:?}", report.no_gap.hypothesis);
    println!("brute lambda : {}", ext(report.no_gap.lambda.value));
    println!("brute zeta   : {}", ext(report.no_gap.zeta.value));
    println!("gap          : {} (tolerance {})", fmt12(report.no_gap.gap), fmt12(report.no_gap.tolerance));
    println!("solver zeta  : {}", ext(report.solver_zeta));
    for c in &report.phi_checks {
        println!(
            "phi({}) primal {} solver {} {}",
            fmt12(c.lambda),
            fmt12(c.primal),
            fmt12(c.solver),
            if c.passed { "ok" } else { "MISMATCH" }
        );
    }
    if report.passed {
        println!("oracle suite passed");
        return Ok(0);
    }
    std::fs::create_dir_all(out_dir)?;
    let dump = out_dir.join("counterexample.json");
    write_json(&dump, &serde_json::json!({ "problem": ProblemFile::from_problem(&p), "report": report }))?;
    eprintln!("oracle suite failed; counterexample written to {}", dump.display());
    Ok(3)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { input, schedule, tol_phi, tol_lambda, continuum_c_star, out_dir } => {
            let opts = SolveOptions { tol_phi, tol_lambda, continuum_c_star, ..schedule.options() };
            cmd_solve(&input, opts, &out_dir)
        }
        Command::Oracle { problem, out_dir } => cmd_oracle(&problem, &out_dir),
        Command::Sweep { input, schedule, out_dir } => cmd_sweep(&input, schedule.options(), &out_dir),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
