//! `epflab`: sweeps, `c*` estimation, KKT and gradient checks, and the
//! localization battery over the built-in problem registry.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use epf_core::exactlab::{
    c_sweep, estimate_c_star, geometric_grid, gradient_check, localize_spec, parse_csv_floats, to_json,
    write_sweep_csv, PenaltyKind, PenaltySpec, RunConfig, SolverConfig, SolverMethod,
};
use epf_core::problem::{lookup, registry, Multipliers};
use epf_core::smoothpen::{estimate_multipliers_sdp, estimate_multipliers_soc, EstimatorConfig};
use epf_core::{Error, Problem};

const EXIT_PREDICATE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const KKT_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(
    name = "epflab",
    version,
    about = "Exact penalty and augmented Lagrangian laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the registry problems and their certified optima.
    ListProblems,
    /// Minimize F(·, c) over a geometric grid of c and write CSV.
    Sweep(SweepArgs),
    /// Bisect for the least exact penalty parameter and write JSON.
    EstimateCstar(CStarArgs),
    /// KKT residual at a point, estimating multipliers when none are given.
    CheckKkt(KktArgs),
    /// Compare supplied derivatives and FD gradients of the penalty.
    Gradcheck(GradArgs),
    /// Run the full localization battery and write the JSON report.
    Localize(LocalizeArgs),
}

#[derive(Args)]
struct PenaltyArgs {
    #[arg(long)]
    problem: String,
    #[arg(long, value_parser = parse_kind)]
    penalty: PenaltyKind,
    /// Order of the nonlinear penalty.
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    zeta1: f64,
    #[arg(long, default_value_t = 1.0)]
    zeta2: f64,
    /// Flat multiplier for al-hpr: Lorentz blocks, matrix upper triangle, then equalities.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    NelderMead,
    GradientDescent,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    method: Option<Method>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    penalty: PenaltyArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0.125)]
    c_min: f64,
    #[arg(long, default_value_t = 1024.0)]
    c_max: f64,
    #[arg(long, default_value_t = 14)]
    c_steps: usize,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CStarArgs {
    #[command(flatten)]
    penalty: PenaltyArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0.01)]
    c_lo: f64,
    #[arg(long, default_value_t = 1000.0)]
    c_hi: f64,
    #[arg(long, default_value_t = 0.01)]
    tol_rel: f64,
    #[arg(long, action = clap::ArgAction::Set, default_value_t = true)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KktArgs {
    #[arg(long)]
    problem: String,
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    /// Cone multipliers: Lorentz blocks, then the matrix upper triangle.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Equality multipliers.
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
}

#[derive(Args)]
struct GradArgs {
    #[command(flatten)]
    penalty: PenaltyArgs,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct LocalizeArgs {
    #[command(flatten)]
    penalty: PenaltyArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// JSON file whose keys override the battery defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<PenaltyKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl PenaltyArgs {
    fn resolve(&self) -> Result<(Problem, PenaltySpec), Error> {
        let problem = lookup::<f64>(&self.problem)?;
        let spec = PenaltySpec {
            kind: self.penalty,
            q: self.q,
            alpha: self.alpha,
            kappa: self.kappa,
            zeta1: self.zeta1,
            zeta2: self.zeta2,
            lambda: self.lambda.as_deref().map(parse_csv_floats).transpose()?,
        };
        Ok((problem, spec))
    }
}

impl SolverArgs {
    fn apply(&self, cfg: &mut SolverConfig) {
        if let Some(n) = self.starts {
            cfg.n_starts = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = self.method {
            cfg.method = match m {
                Method::NelderMead => SolverMethod::NelderMead,
                Method::GradientDescent => SolverMethod::GradientDescent,
            };
        }
    }
}

/// Failure classes mapped to exit codes.
enum Failure {
    Input(Error),
    Predicate(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

type CmdResult = Result<(), Failure>;

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Error> {
    let mut w = output(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn list_problems() -> CmdResult {
    println!(
        "{:<12} {:>3}  {:<22} {:>10}  {:<24} penalties",
        "name", "dim", "constraints", "f*", "x*"
    );
    for p in registry::<f64>() {
        let mut cons = Vec::new();
        if !p.soc_blocks.is_empty() {
            let dims: Vec<String> = p.soc_blocks.iter().map(|b| b.dim.to_string()).collect();
            cons.push(format!("soc[{}]", dims.join(",")));
        }
        if let Some(s) = &p.sdp {
            cons.push(format!("sdp[{}]", s.order));
        }
        if p.eq_dim() > 0 {
            cons.push(format!("eq[{}]", p.eq_dim()));
        }
        let cert = p.certificate.as_ref().expect("registry problems are certified");
        let x: Vec<String> = cert.x_star.iter().map(|v| format!("{v}")).collect();
        let kinds: Vec<&str> = PenaltyKind::ALL
            .into_iter()
            .filter(|&k| PenaltySpec::applicable(k, &p))
            .map(PenaltyKind::name)
            .collect();
        println!(
            "{:<12} {:>3}  {:<22} {:>10}  {:<24} {}",
            p.name,
            p.dim,
            cons.join(" "),
            format!("{}", cert.f_star),
            format!("({})", x.join(", ")),
            kinds.join(",")
        );
    }
    Ok(())
}

fn sweep(a: &SweepArgs) -> CmdResult {
    let (problem, spec) = a.penalty.resolve()?;
    let sf = spec.build(&problem)?;
    let mut cfg = SolverConfig::default();
    a.solver.apply(&mut cfg);
    let grid = geometric_grid(a.c_min, a.c_max, a.c_steps)?;
    let records = c_sweep(sf.as_ref(), &grid, &cfg)?;
    write_sweep_csv(output(a.out.as_deref())?, problem.dim, &records)?;
    Ok(())
}

fn estimate_cstar(a: &CStarArgs) -> CmdResult {
    let (problem, spec) = a.penalty.resolve()?;
    let sf = spec.build(&problem)?;
    let mut cfg = SolverConfig::default();
    a.solver.apply(&mut cfg);
    let est = estimate_c_star(sf.as_ref(), a.c_lo, a.c_hi, a.tol_rel, a.strict, &cfg)?;
    write_text(a.out.as_deref(), &to_json(&est)?)?;
    match est.c_star {
        Some(c) => {
            eprintln!("c* ≈ {c:.6e}");
            Ok(())
        }
        None => Err(Failure::Predicate(format!("no exact c up to {}", a.c_hi))),
    }
}

fn check_kkt(a: &KktArgs) -> CmdResult {
    let p = lookup::<f64>(&a.problem)?;
    let x = parse_csv_floats(&a.x)?;
    if x.len() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            got: x.len(),
        }
        .into());
    }
    let m = if a.lambda.is_none() && a.mu.is_none() {
        let cfg = EstimatorConfig::default();
        let est = if p.sdp.is_some() {
            estimate_multipliers_sdp(&p, &x, &cfg)
        } else {
            estimate_multipliers_soc(&p, &x, &cfg)
        };
        let est = est.map_err(|e| Failure::Predicate(format!("multiplier estimate unavailable: {e}")))?;
        println!(
            "estimated multipliers (subproblem residual {:.3e}, min eigenvalue {:.3e})",
            est.subproblem_residual, est.hessian_min_eig
        );
        est.multipliers
    } else {
        let mut flat = a
            .lambda
            .as_deref()
            .map(parse_csv_floats)
            .transpose()?
            .unwrap_or_default();
        flat.extend(a.mu.as_deref().map(parse_csv_floats).transpose()?.unwrap_or_default());
        Multipliers::unflatten(&p, &flat)?
    };
    let flat: Vec<String> = m.flatten().iter().map(|v| format!("{v:.10e}")).collect();
    println!("multipliers: [{}]", flat.join(", "));
    let gap = p.feasibility_gap(&x)?;
    println!("feasibility gap: {:.3e}", gap.total());
    let r = p.kkt_residual(&x, &m)?;
    println!("kkt residual: {r:.3e}");
    if r > KKT_TOL {
        return Err(Failure::Predicate(format!("KKT residual {r:.3e} exceeds {KKT_TOL:e}")));
    }
    Ok(())
}

fn gradcheck(a: &GradArgs) -> CmdResult {
    let (problem, spec) = a.penalty.resolve()?;
    let sf = spec.build(&problem)?;
    let smooth = matches!(spec.kind, PenaltyKind::C1Socp | PenaltyKind::C1Sdp | PenaltyKind::AlHpr);
    let r = gradient_check(sf.as_ref(), a.c, a.points, a.seed, smooth)?;
    let show = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |e| format!("{e:.3e}"));
    println!(
        "problem {} penalty {} c {} points {}",
        r.problem, r.penalty, r.c, r.points
    );
    println!("objective gradient     {}", show(r.objective_rel_err));
    println!("lorentz jacobian       {}", show(r.soc_jacobian_rel_err));
    println!("matrix partials        {}", show(r.sdp_partials_rel_err));
    println!("equality jacobian      {}", show(r.eq_jacobian_rel_err));
    println!(
        "penalty fd steps       {} over {} points{}",
        show(r.penalty_step_rel_diff),
        r.penalty_points_used,
        if r.penalty_gated { "" } else { " (informational)" }
    );
    if r.passed {
        println!("PASS");
        Ok(())
    } else {
        Err(Failure::Predicate("gradient check failed".into()))
    }
}

fn localize(a: &LocalizeArgs) -> CmdResult {
    let (problem, spec) = a.penalty.resolve()?;
    let mut cfg = match &a.config {
        Some(path) => RunConfig::from_json(&std::fs::read_to_string(path).map_err(Error::from)?)?,
        None => RunConfig::default(),
    };
    a.solver.apply(&mut cfg.solver);
    let report = localize_spec(&problem, &spec, &cfg)?;
    write_text(a.out.as_deref(), &to_json(&report)?)?;
    let v = report.verdicts;
    eprintln!(
        "penalty_type={} nondegenerate={} local_exact={} sublevel_bounded={} c_star={}",
        v.penalty_type,
        v.nondegenerate,
        v.local_exact,
        v.sublevel_bounded,
        report.c_star.map_or_else(|| "none".into(), |c| format!("{c:.6e}"))
    );
    if report.c_star.is_some() && v.penalty_type && v.nondegenerate && v.local_exact {
        Ok(())
    } else {
        Err(Failure::Predicate("localization predicates failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::ListProblems => list_problems(),
        Command::Sweep(a) => sweep(a),
        Command::EstimateCstar(a) => estimate_cstar(a),
        Command::CheckKkt(a) => check_kkt(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Localize(a) => localize(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Predicate(msg)) => {
            eprintln!("predicate failed: {msg}");
            ExitCode::from(EXIT_PREDICATE)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
