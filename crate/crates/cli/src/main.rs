//! `socp`: solve, warm-start, inspect and benchmark SOCP instances.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use socp_core::bench::{run_bench, unified_level, BenchParams, BenchReport, PerturbationBounds};
use socp_core::cone::{membership, min_eigenvalue};
use socp_core::geometry::{d2, dinf, in_neighborhood, mu, Flavor, NeighborhoodParams};
use socp_core::io::{parse_point, parse_problem, to_json, write_trace, IoError, SolutionFile};
use socp_core::ipm::{solve, validate_params, SolverParams, StopRule};
use socp_core::kkt::ScalingKind;
use socp_core::problem::{compute_residuals, SocpProblem};
use socp_core::warm_start::{
    choose_omega, cold_start, diagnostics, warm_start_point, OmegaMin, OmegaPolicy, PrevSolution, WarmStartDiagnostics,
};
use socp_core::SocpError;

#[derive(Parser)]
#[command(name = "socp", version, about = "Short-step interior-point solver for second-order cone programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scaling {
    Identity,
    Nt,
}

impl From<Scaling> for ScalingKind {
    fn from(s: Scaling) -> Self {
        match s {
            Scaling::Identity => ScalingKind::Identity,
            Scaling::Nt => ScalingKind::Nt,
        }
    }
}

#[derive(clap::Args)]
struct MethodArgs {
    #[arg(long, default_value_t = 0.08)]
    gamma: f64,
    #[arg(long, default_value_t = 0.03)]
    delta: f64,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "identity")]
    scaling: Scaling,
}

impl MethodArgs {
    fn params(&self) -> SolverParams {
        SolverParams {
            gamma: self.gamma,
            delta: self.delta,
            eps: self.epsilon,
            scaling: self.scaling.into(),
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem from the cold start.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long)]
        output: PathBuf,
        /// Write the per-iteration CSV trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long = "max-iter")]
        max_iter: Option<usize>,
    },
    /// Solve a perturbed problem cold and warm, and compare.
    Warmstart {
        #[arg(long = "prev-problem")]
        prev_problem: PathBuf,
        #[arg(long = "prev-solution")]
        prev_solution: PathBuf,
        #[arg(long)]
        problem: PathBuf,
        /// `auto` or a value in [0, 1].
        #[arg(long, default_value = "auto")]
        omega: String,
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Report residuals and centrality of a point.
    Check {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        point: PathBuf,
        #[arg(long, default_value_t = 0.08)]
        gamma: f64,
    },
    /// Cold vs warm iteration counts on a drift sequence.
    Bench {
        #[arg(long = "base-problem")]
        base_problem: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long = "perturb-a", default_value_t = 0.0)]
        perturb_a: f64,
        #[arg(long = "perturb-b", default_value_t = 0.0)]
        perturb_b: f64,
        #[arg(long = "perturb-c", default_value_t = 0.0)]
        perturb_c: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long)]
        report: PathBuf,
    },
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    kind: &'static str,
    message: String,
    numerical: bool,
}

impl Failure {
    fn input(kind: &'static str, message: impl Into<String>) -> Self {
        Failure { kind, message: message.into(), numerical: false }
    }

    fn code(&self) -> u8 {
        if self.numerical { 3 } else { 2 }
    }
}

impl From<SocpError> for Failure {
    fn from(e: SocpError) -> Self {
        Failure { kind: if e.is_numerical() { "numerical" } else { "model" }, numerical: e.is_numerical(), message: e.to_string() }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Model(m) => m.into(),
            other => Failure::input("parse", other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::input("io", format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Failure::input("io", format!("{}: {e}", path.display())))
}

fn load_problem(path: &Path) -> CliResult<SocpProblem> {
    let parsed = parse_problem(&read(path)?).map_err(|e| match e {
        IoError::Model(m) => Failure::input("model", format!("{}: {m}", path.display())),
        other => Failure::input("parse", format!("{}: {other}", path.display())),
    })?;
    if !parsed.report.is_valid() {
        return Err(Failure::input("validation", format!("{}: {:?}", path.display(), parsed.report.findings)));
    }
    Ok(parsed.problem)
}

fn check_params(params: &SolverParams, k: usize) -> CliResult<()> {
    let check = validate_params(params.gamma, params.delta, k);
    if !check.ok {
        return Err(Failure::input(
            "params",
            format!("gamma = {} must exceed {} for delta = {}", params.gamma, check.gamma_tilde, params.delta),
        ));
    }
    Ok(())
}

fn cmd_solve(
    problem: &Path,
    method: &MethodArgs,
    output: &Path,
    trace: Option<&Path>,
    max_iter: Option<usize>,
) -> CliResult<serde_json::Value> {
    let p = load_problem(problem)?;
    let params = SolverParams { max_iterations: max_iter, trace_enabled: trace.is_some(), ..method.params() };
    check_params(&params, p.k())?;
    let res = solve(&p, &cold_start(&p.cones, p.p()), &params)?;
    let doc = SolutionFile::from_result(&p, &res, &params);
    write(output, &to_json(&doc))?;
    if let Some(path) = trace {
        write(path, &write_trace(&res.trace))?;
    }
    Ok(json!({
        "status": doc.status,
        "iterations": doc.iterations,
        "predicted_iterations": doc.predicted_iterations,
        "primal_objective": doc.primal_objective,
        "dual_objective": doc.dual_objective,
    }))
}

#[derive(Serialize)]
struct DiagnosticsDoc {
    c_a: f64,
    c_b: f64,
    c_p: f64,
    c_at: f64,
    c_c: f64,
    c_d: f64,
    c_mu: f64,
    c_xs: f64,
    psi_o: f64,
    rho: f64,
    rho_raw: f64,
    xi_o: f64,
    omega_eval: f64,
    /// `null` when no `omega` satisfies the centrality condition.
    omega_min: Option<f64>,
    gamma_o: f64,
    mu_o: f64,
    nu: f64,
    c_w: f64,
    predicted_saving: usize,
    vacuous_primal: bool,
    vacuous_dual: bool,
}

impl From<&WarmStartDiagnostics> for DiagnosticsDoc {
    fn from(d: &WarmStartDiagnostics) -> Self {
        DiagnosticsDoc {
            c_a: d.c_a,
            c_b: d.c_b,
            c_p: d.c_p,
            c_at: d.c_at,
            c_c: d.c_c,
            c_d: d.c_d,
            c_mu: d.c_mu,
            c_xs: d.c_xs,
            psi_o: d.psi_o,
            rho: d.rho,
            rho_raw: d.rho_raw,
            xi_o: d.xi_o,
            omega_eval: d.omega_eval,
            omega_min: match d.omega_min {
                OmegaMin::Value(v) => Some(v),
                OmegaMin::Infeasible => None,
            },
            gamma_o: d.gamma_o,
            mu_o: d.mu_o,
            nu: d.nu,
            c_w: d.c_w,
            predicted_saving: d.predicted_saving,
            vacuous_primal: d.vacuous_primal,
            vacuous_dual: d.vacuous_dual,
        }
    }
}

fn parse_omega(text: &str) -> CliResult<OmegaPolicy> {
    if text == "auto" {
        return Ok(OmegaPolicy::MaxAdmissible);
    }
    match text.parse::<f64>() {
        Ok(w) if (0.0..=1.0).contains(&w) => Ok(OmegaPolicy::Fixed(w)),
        _ => Err(Failure::input("params", format!("--omega must be `auto` or a number in [0, 1], got `{text}`"))),
    }
}

struct WarmstartArgs<'a> {
    prev_problem: &'a Path,
    prev_solution: &'a Path,
    problem: &'a Path,
    omega: &'a str,
    method: &'a MethodArgs,
    output: &'a Path,
    report: Option<&'a Path>,
}

fn cmd_warmstart(a: WarmstartArgs) -> CliResult<serde_json::Value> {
    let policy = parse_omega(a.omega)?;
    let old = load_problem(a.prev_problem)?;
    let new = load_problem(a.problem)?;
    let prev_point = parse_point(&read(a.prev_solution)?)?;
    let prev = PrevSolution::from_point(&prev_point)?;
    let base = a.method.params();
    check_params(&base, new.k())?;

    // The evaluation point for the reported constants is the chosen omega.
    let probe = diagnostics(&old, &new, &prev, base.gamma, base.delta, 1.0)?;
    let (omega, fallback_reason) = match choose_omega(&probe, policy) {
        Ok(w) => (Some(w), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let diag = diagnostics(&old, &new, &prev, base.gamma, base.delta, omega.unwrap_or(0.0))?;

    let eps_u = unified_level(&new, base.eps)?;
    let params = SolverParams { stop_rule: StopRule::Unified { eps_u }, ..base };
    let q_c = cold_start(&new.cones, new.p());
    let nb = NeighborhoodParams::new(params.gamma, Flavor::N2)?;
    let (start, fallback_reason) = match omega {
        Some(w) => {
            let q_w = warm_start_point(&prev, w, &new.cones)?;
            if in_neighborhood(&q_w, &new.cones, nb) {
                (q_w, fallback_reason)
            } else {
                (q_c.clone(), Some(format!("warm point at omega = {w} is outside N2(gamma)")))
            }
        }
        None => (q_c.clone(), fallback_reason),
    };
    let warm_used = fallback_reason.is_none();
    let cold = solve(&new, &q_c, &params)?;
    let warm = solve(&new, &start, &params)?;
    write(a.output, &to_json(&SolutionFile::from_result(&new, &warm, &params)))?;

    let report = json!({
        "omega": if warm_used { omega } else { None },
        "fallback_reason": fallback_reason,
        "eps_u": eps_u,
        "diagnostics": DiagnosticsDoc::from(&diag),
        "cold": { "status": cold.status.tag(), "iterations": cold.iterations, "predicted_iterations": cold.predicted_iterations },
        "warm": { "status": warm.status.tag(), "iterations": warm.iterations, "predicted_iterations": warm.predicted_iterations },
        "predicted_saving": if warm_used { diag.predicted_saving } else { 0 },
        "measured_saving": cold.iterations as i64 - warm.iterations as i64,
    });
    if let Some(path) = a.report {
        write(path, &to_json(&report))?;
    }
    Ok(report)
}

fn cmd_check(problem: &Path, point: &Path, gamma: f64) -> CliResult<serde_json::Value> {
    let p = load_problem(problem)?;
    let z = parse_point(&read(point)?)?;
    let r = compute_residuals(&p, &z)?;
    let spec = &p.cones;
    let interior = membership(&z.x, spec, true) && membership(&z.s, spec, true) && z.kappa > 0.0 && z.tau > 0.0;
    let (dist2, distinf) = if interior { (Some(d2(&z, spec)?), Some(dinf(&z, spec)?)) } else { (None, None) };
    let n2 = NeighborhoodParams::new(gamma, Flavor::N2)?;
    let ninf = NeighborhoodParams::new(gamma, Flavor::NInf)?;
    Ok(json!({
        "rp_norm": r.r_p_norm,
        "rd_norm": r.r_d_norm,
        "rg": r.r_g,
        "mu": mu(&z, spec),
        "d2": dist2,
        "dinf": distinf,
        "lambda_min_x": min_eigenvalue(&z.x, spec),
        "lambda_min_s": min_eigenvalue(&z.s, spec),
        "interior": interior,
        "gamma": gamma,
        "in_n2": in_neighborhood(&z, spec, n2),
        "in_ninf": in_neighborhood(&z, spec, ninf),
    }))
}

fn summary_table(report: &BenchReport) -> String {
    let mut out = format!("base cold iterations: {}\n", report.base_iterations);
    out.push_str("step  omega     cold  warm  predicted  measured\n");
    for s in &report.steps {
        let omega = s.omega.map_or_else(|| "cold".to_string(), |w| format!("{w:.4}"));
        out.push_str(&format!(
            "{:>4}  {:<8}  {:>4}  {:>4}  {:>9}  {:>8}\n",
            s.step, omega, s.cold_iterations, s.warm_iterations, s.predicted_saving, s.measured_saving
        ));
    }
    out.push_str(&format!("total cold {} warm {}\n", report.total_cold_iterations, report.total_warm_iterations));
    out
}

fn cmd_bench(
    base_problem: &Path,
    steps: usize,
    bounds: PerturbationBounds,
    seed: u64,
    method: &MethodArgs,
    report: &Path,
) -> CliResult<BenchReport> {
    for (flag, v) in [("--perturb-a", bounds.a), ("--perturb-b", bounds.b), ("--perturb-c", bounds.c)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Failure::input("params", format!("{flag} must be a nonnegative number")));
        }
    }
    let base = load_problem(base_problem)?;
    let sp = method.params();
    check_params(&sp, base.k())?;
    let params = BenchParams { gamma: sp.gamma, delta: sp.delta, eps: sp.eps, scaling: sp.scaling, ..Default::default() };
    let out = run_bench(&base, steps, bounds, seed, &params)?;
    write(report, &to_json(&out))?;
    Ok(out)
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Solve { problem, method, output, trace, max_iter } => {
            cmd_solve(&problem, &method, &output, trace.as_deref(), max_iter).map(|v| to_json(&v))
        }
        Command::Warmstart { prev_problem, prev_solution, problem, omega, method, output, report } => {
            cmd_warmstart(WarmstartArgs {
                prev_problem: &prev_problem,
                prev_solution: &prev_solution,
                problem: &problem,
                omega: &omega,
                method: &method,
                output: &output,
                report: report.as_deref(),
            })
            .map(|v| to_json(&v))
        }
        Command::Check { problem, point, gamma } => cmd_check(&problem, &point, gamma).map(|v| to_json(&v)),
        Command::Bench { base_problem, steps, perturb_a, perturb_b, perturb_c, seed, method, report } => {
            let bounds = PerturbationBounds { a: perturb_a, b: perturb_b, c: perturb_c };
            cmd_bench(&base_problem, steps, bounds, seed, &method, &report).map(|r| summary_table(&r))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let f = Failure::input("usage", e.to_string());
            eprint!("{}", to_json(&json!({ "error": f.kind, "message": f.message, "exit_code": f.code() })));
            return ExitCode::from(f.code());
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprint!("{}", to_json(&json!({ "error": f.kind, "message": f.message, "exit_code": f.code() })));
            ExitCode::from(f.code())
        }
    }
}
