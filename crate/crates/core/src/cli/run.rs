use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::dense;
use crate::error::{Error, Result};
use crate::kamflow::{is_isolated, reference_eigenvalue, Checkpoint, DiagnosticsRow, FlowMode, FlowResult, FlowRunner};
use crate::markov::{rn_derivative, stationary_state_direct, stationary_state_via_flow, trace_distance};
use crate::verify::{
    all_passed, check_dressing_ground_state, check_spectrum_preserved, format_table, run_one, run_suite, summarize,
    CheckKind, CheckReport, Descriptor, SuiteConfig,
};

use super::config::{matrix_to_doc, parse_config, Kind, Overrides, RunConfig};

/// Largest Hilbert space dimension for which flow runs add dense spectral checks.
pub const DENSE_CHECK_LIMIT: usize = 1024;

#[derive(Debug, Parser)]
#[command(name = "kamflow", version, about = "Locality-preserving normal-form flow for perturbed lattice generators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run or resume a flow.
    #[command(subcommand)]
    Flow(FlowCommand),
    /// Randomized checks of the bounds used by the flow.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Stationary states of Markov generators.
    #[command(subcommand)]
    Markov(MarkovCommand),
}

#[derive(Debug, Subcommand)]
pub enum FlowCommand {
    Run(RunArgs),
    /// Continue from `checkpoint.json` in the output directory.
    Resume(RunArgs),
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    Suite(SuiteArgs),
    /// Reproduce a single instance from its seed.
    One(OneArgs),
}

#[derive(Debug, Subcommand)]
pub enum MarkovCommand {
    Run(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mode: Option<FlowMode>,
    #[arg(long)]
    pub vtol: Option<f64>,
    #[arg(long)]
    pub nmax: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, mode: self.mode, vtol: self.vtol, nmax: self.nmax }
    }

    fn load(&self, kind: Kind) -> Result<RunConfig> {
        let mut cfg = parse_config(&self.config)?;
        cfg.apply(&self.overrides())?;
        if cfg.kind != kind {
            return Err(Error::schema("kind", format!("expected `{}`", serde_json::to_value(kind)?.as_str().unwrap_or(""))));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SuiteArgs {
    /// Optional configuration with a `verify` section.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Instances per check.
    #[arg(long)]
    pub instances: Option<usize>,
    /// Restricts the suite to these checks.
    #[arg(long = "check")]
    pub checks: Vec<CheckKind>,
    /// Multiplies every bound; values below 1 force violations.
    #[arg(long)]
    pub bound_scale: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OneArgs {
    #[arg(long)]
    pub check: CheckKind,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub bound_scale: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command line and returns the process exit code: 0 when every flow
/// converged and every check passed, 1 otherwise.
pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Flow(FlowCommand::Run(args)) => flow_run(args, false),
        Command::Flow(FlowCommand::Resume(args)) => flow_run(args, true),
        Command::Verify(VerifyCommand::Suite(args)) => verify_suite(args),
        Command::Verify(VerifyCommand::One(args)) => verify_one(args),
        Command::Markov(MarkovCommand::Run(args)) => markov_run(args),
    }
}

/// Parses `args`, runs, and renders errors; exit code 2 signals an error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(ctx) = context(&e) {
                eprintln!("  note: {ctx}");
            }
            2
        }
    }
}

/// What an error means for the flow.
pub fn context(e: &Error) -> Option<&'static str> {
    Some(match e {
        Error::GapClosed(_) => "the reduced resolvent of H0 + F needs zero to stay a simple isolated eigenvalue",
        Error::NotFrustrationFree(_) => "the resolvent is only defined for frustration-free F, with F Omega = 0 and Omega* F = 0",
        Error::NotNonDiagonal(_) => "the generator is built from the pure raising and lowering sectors only",
        Error::GeneratorTooLarge { .. } => {
            "the commutator series needs |A_n| at most a sixth of the decay-rate decrement; use dense mode or a smaller perturbation"
        }
        Error::NotConverged { .. } => "v_n stayed above the tolerance; raise --nmax or reduce the perturbation",
        Error::NotSelfAdjointGenerator { .. } => {
            "single-site generators must be self-adjoint in the weighted inner product (reversible dynamics)"
        }
        Error::IdentityNotAnnihilated(_) => "Markov generators must annihilate the constant observable",
        Error::SteinerLimitExceeded { .. } => "raise `volume.steiner_limit` to evaluate weights of larger supports",
        Error::Schema { .. } | Error::Json { .. } => "see the configuration reference in the README",
        _ => return None,
    })
}

fn create_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_checks(path: &Path, reports: &[CheckReport]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for r in reports {
        writeln!(f, "{}", r.to_json_line())?;
    }
    Ok(())
}

fn write_diagnostics(path: &Path, rows: &[DiagnosticsRow]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "{}", DiagnosticsRow::CSV_HEADER)?;
    for r in rows {
        writeln!(f, "{}", r.to_csv())?;
    }
    Ok(())
}

fn flow_summary(result: &FlowResult, runner: &FlowRunner, extra: BTreeMap<&str, serde_json::Value>) -> serde_json::Value {
    let d = result.d();
    let cfg = runner.config();
    let mut summary = json!({
        "converged": result.converged,
        "steps": result.transform.len(),
        "epsilon_value": result.epsilon_value,
        "epsilon_threshold": cfg.epsilon_threshold,
        "sum_a_kappa": result.sum_a_kappa,
        "d": [d.re, d.im],
        "d_per_site": [d.re / cfg.space().num_sites() as f64, d.im / cfg.space().num_sites() as f64],
        "v_final": result.diagnostics.last().map_or(0.0, |r| r.v_n),
        "drop_budget": result.state.dropped,
        "self_adjoint": runner.self_adjoint(),
        "mode": cfg.mode,
        "kappa": cfg.kappa,
        "kappa_prime": cfg.kappa_prime,
        "vtol": cfg.vtol,
        "nmax": cfg.nmax,
    });
    let obj = summary.as_object_mut().expect("object");
    for (k, v) in extra {
        obj.insert(k.to_string(), v);
    }
    summary
}

fn flow_run(args: &RunArgs, resume: bool) -> Result<i32> {
    let cfg = args.load(Kind::Flow)?;
    let flow_cfg = cfg.flow_config()?;
    create_out(&args.out)?;
    let ckpt_path = args.out.join("checkpoint.json");
    let mut runner = if resume {
        let text = fs::read_to_string(&ckpt_path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        FlowRunner::resume(&flow_cfg, &ckpt)?
    } else {
        FlowRunner::new(&flow_cfg)?
    };
    runner.run()?;
    let result = runner.result()?;
    write_diagnostics(&args.out.join("diagnostics.csv"), &result.diagnostics)?;
    write_json(&ckpt_path, &runner.checkpoint())?;

    let space = flow_cfg.space();
    let mut checks = Vec::new();
    let mut extra = BTreeMap::new();
    let e0 = reference_eigenvalue(&result);
    extra.insert("reference_eigenvalue", json!([e0.re, e0.im]));
    if result.converged && space.full_dim() <= DENSE_CHECK_LIMIT {
        let h = (&space.h0() + &flow_cfg.perturbation).dense();
        let hf = result.h_final().dense();
        checks.push(check_spectrum_preserved(&h, &hf)?);
        // the perturbed reference eigenvalue stays isolated within a disk of radius g/4
        let radius = space.gap() / 4.0;
        let isolated = is_isolated(&hf, e0, radius);
        extra.insert("isolated_radius", json!(radius));
        extra.insert("isolated", json!(isolated));
        let measured = if isolated { 0.0 } else { 1.0 };
        let desc = Descriptor::default().param("radius", radius).note("only the reference eigenvalue lies within g/4");
        checks.push(CheckReport::new("reference_isolated", measured, 0.0, 0.0, desc));
        if runner.self_adjoint() {
            checks.push(check_dressing_ground_state(&result.transform, &(&space.h0() + &flow_cfg.perturbation))?);
        }
    }
    write_checks(&args.out.join("checks.jsonl"), &checks)?;
    extra.insert("checks_passed", json!(all_passed(&checks)));
    write_json(&args.out.join("summary.json"), &flow_summary(&result, &runner, extra))?;
    println!(
        "flow {}: {} steps, v_n = {:.3e}, d/|Λ| = {:.6e}",
        if result.converged { "converged" } else { "did not converge" },
        result.transform.len(),
        result.diagnostics.last().map_or(0.0, |r| r.v_n),
        result.d().re / space.num_sites() as f64
    );
    Ok(if result.converged && all_passed(&checks) { 0 } else { 1 })
}

fn suite_summary_json(cfg: &SuiteConfig, reports: &[CheckReport]) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = summarize(reports)
        .into_iter()
        .map(|s| {
            let statement = s.check.parse::<CheckKind>().map(CheckKind::statement).unwrap_or("");
            let mut v = serde_json::to_value(&s).expect("serializable");
            v.as_object_mut().expect("object").insert("statement".into(), json!(statement));
            v
        })
        .collect();
    json!({
        "seed": cfg.seed,
        "instances": cfg.instances,
        "bound_scale": cfg.bound_scale,
        "all_passed": all_passed(reports),
        "checks": rows,
    })
}

fn verify_suite(args: &SuiteArgs) -> Result<i32> {
    let mut cfg = match &args.config {
        Some(path) => {
            let rc = parse_config(path)?;
            rc.suite_config()
        }
        None => SuiteConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.instances {
        cfg.instances = n;
    }
    if !args.checks.is_empty() {
        cfg.checks = args.checks.clone();
    }
    if let Some(s) = args.bound_scale {
        if !(s > 0.0) {
            return Err(Error::schema("bound_scale", "must be positive"));
        }
        cfg.bound_scale = s;
    }
    create_out(&args.out)?;
    let reports = run_suite(&cfg);
    write_checks(&args.out.join("checks.jsonl"), &reports)?;
    write_json(&args.out.join("summary.json"), &suite_summary_json(&cfg, &reports))?;
    print!("{}", format_table(&summarize(&reports)));
    for r in reports.iter().filter(|r| r.failed()).take(10) {
        let statement = r.name.parse::<CheckKind>().map(CheckKind::statement).unwrap_or("");
        eprintln!("FAIL {} [{}] seed {:?}: measured {:e} > bound {:e}", r.name, statement, r.descriptor.seed, r.measured, r.bound);
    }
    Ok(if all_passed(&reports) { 0 } else { 1 })
}

fn verify_one(args: &OneArgs) -> Result<i32> {
    if !(args.bound_scale > 0.0) {
        return Err(Error::schema("bound_scale", "must be positive"));
    }
    let report = run_one(args.check, args.seed, args.bound_scale);
    println!("{}", report.to_json_line());
    if let Some(out) = &args.out {
        create_out(out)?;
        write_checks(&out.join("checks.jsonl"), std::slice::from_ref(&report))?;
    }
    Ok(if report.pass { 0 } else { 1 })
}

/// Tolerances of the Markov consistency checks.
pub const STATIONARY_TOLERANCE: f64 = 1e-8;
pub const SHIFT_TOLERANCE: f64 = 1e-10;
pub const PROPORTIONALITY_TOLERANCE: f64 = 1e-9;

fn markov_run(args: &RunArgs) -> Result<i32> {
    let cfg = args.load(Kind::Markov)?;
    let problem = cfg.markov_problem()?;
    create_out(&args.out)?;
    let st = stationary_state_via_flow(&problem)?;
    let direct = stationary_state_direct(&problem.generator_natural(), &problem.dims(), problem.is_classical())?;
    let distance = trace_distance(&st.density, &direct);
    write_diagnostics(&args.out.join("diagnostics.csv"), &st.flow.diagnostics)?;

    let desc = || Descriptor { extents: problem.volume().extents().to_vec(), local_dims: problem.dims(), ..Default::default() };
    let mut checks = vec![
        CheckReport::new("stationary_distance", distance, 0.0, STATIONARY_TOLERANCE, desc()),
        CheckReport::new("shift_vanishes", st.d.norm(), 0.0, SHIFT_TOLERANCE, desc()),
        CheckReport::new("identity_proportional", st.identity_residual, 0.0, PROPORTIONALITY_TOLERANCE, desc()),
        CheckReport::new("reference_annihilated", st.annihilation_residual, 0.0, PROPORTIONALITY_TOLERANCE, desc()),
    ];
    let mut doc = json!({
        "classical": problem.is_classical(),
        "sign_convention": "the flow runs on -L, so -L_0 plays H0 and -L' plays H'",
        "lambda": [st.lambda.re, st.lambda.im],
        "density": matrix_to_doc(&st.density),
        "direct_density": matrix_to_doc(&direct),
        "distance": distance,
        "d": [st.d.re, st.d.im],
        "identity_residual": st.identity_residual,
        "annihilation_residual": st.annihilation_residual,
    });
    if problem.is_classical() {
        let f = rn_derivative(&problem, &st)?;
        let nu = problem.reference_state();
        let err = (0..direct.nrows())
            .map(|s| (f.ratio[s] - direct[(s, s)] / nu[(s, s)]).norm())
            .fold(0.0, f64::max);
        checks.push(CheckReport::new("density_ratio", err, 0.0, STATIONARY_TOLERANCE, desc()));
        let obj = doc.as_object_mut().expect("object");
        obj.insert("distribution".into(), json!(st.density.diagonal().iter().map(|z| z.re).collect::<Vec<_>>()));
        obj.insert("rn_derivative".into(), json!(f.values.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()));
        obj.insert("density_ratio".into(), json!(f.ratio.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()));
        obj.insert("rn_positive".into(), json!(f.positive));
    }
    write_json(&args.out.join("stationary.json"), &doc)?;
    write_checks(&args.out.join("checks.jsonl"), &checks)?;
    let summary = json!({
        "converged": st.flow.converged,
        "steps": st.flow.transform.len(),
        "epsilon_value": st.flow.epsilon_value,
        "sum_a_kappa": st.flow.sum_a_kappa,
        "distance": distance,
        "checks_passed": all_passed(&checks),
        "trace_norm_check": dense::trace_norm(&st.density),
    });
    write_json(&args.out.join("summary.json"), &summary)?;
    println!("stationary state: distance to direct solve {distance:.3e}, lambda = {:.12}", st.lambda.re);
    Ok(if st.flow.converged && all_passed(&checks) { 0 } else { 1 })
}
