//! `elicitkit` command-line front end.

mod render;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use elicitkit::alignment::{decide_incentivizable, Status, DEFAULT_TOL};
use elicitkit::geometry::{
    classify_graph, enumerate_cycles, graph_for_bundle, splitting_collections, TIE_TOL,
};
use elicitkit::model::{
    builtin_question, bundle_to_json, gen_canonical, load_bundle, to_canonical_json,
    validate_bundle, Params, ProblemBundle, DEFAULT_VALIDATION_TOL,
};
use elicitkit::synth::{lottery_form, mechanism_from_json, mechanism_to_json, synthesize};
use elicitkit::verify::{find_distortion_witness, verify_incentivizability, GridSpec};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Exit codes shared by every subcommand.
mod code {
    pub const OK: u8 = 0;
    pub const INPUT: u8 = 2;
    pub const NEGATIVE: u8 = 3;
    pub const INCONCLUSIVE: u8 = 4;
    pub const NOT_FOUND: u8 = 5;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Md,
}

#[derive(Debug, Parser)]
#[command(name = "elicitkit", version)]
#[command(about = "Check whether a belief question can be paid for without distorting a decision")]
struct Cli {
    /// Alignment tolerance (relative to the input scale).
    #[arg(long, global = true, env = "ELICITKIT_TOL", default_value_t = DEFAULT_TOL)]
    tol: f64,

    /// Denominator of the rational belief grid.
    #[arg(long, global = true, default_value_t = 12)]
    grid: usize,

    /// Number of random beliefs.
    #[arg(long, global = true, default_value_t = 2000)]
    samples: usize,

    #[arg(long, global = true, env = "ELICITKIT_SEED", default_value_t = 0)]
    seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Probability that the decision is paid; overrides the bundle's value.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Generator name, e.g. quadratic-loss, star, mc-test.
    name: String,
    #[arg(long)]
    n: Option<usize>,
    /// Number of states for `star`.
    #[arg(long)]
    theta: Option<usize>,
    /// Safe payoff for `star`.
    #[arg(long)]
    s: Option<f64>,
    /// Comma-separated per-state rewards.
    #[arg(long)]
    r: Option<String>,
    /// Common reward for `state-matching` when `--r` is absent.
    #[arg(long = "R")]
    big_r: Option<f64>,
    /// Number of test questions for `mc-test`.
    #[arg(long)]
    i: Option<usize>,
    /// Options per question for `mc-test`.
    #[arg(long)]
    omega: Option<usize>,
    /// Question to attach.
    #[arg(long)]
    question: Option<String>,
    /// Distance for `within-x`.
    #[arg(long)]
    x: Option<String>,
    /// Score threshold for `threshold`.
    #[arg(long)]
    z: Option<String>,
    /// Size of the first half for `improvement`.
    #[arg(long)]
    split: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a bundle from a built-in example.
    Gen(GenArgs),
    /// Describe the adjacency graph of a bundle.
    Classify { bundle: PathBuf },
    /// Decide whether the bundle's question is incentivizable.
    Check { bundle: PathBuf },
    /// Build a payment scheme for an incentivizable question.
    Synthesize { bundle: PathBuf },
    /// Test a mechanism over the belief simplex.
    Verify { bundle: PathBuf, mechanism: PathBuf },
    /// Search for a belief where a mechanism distorts behavior.
    Witness { bundle: PathBuf, mechanism: PathBuf },
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: code::INPUT, error: e.into() }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(c) => ExitCode::from(c),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        return Err(anyhow!("--tol must be positive").into());
    }
    if let Some(a) = cli.alpha {
        if !(a > 0.0 && a < 1.0) {
            return Err(anyhow!("--alpha must lie strictly between 0 and 1").into());
        }
    }
    match &cli.command {
        Command::Gen(args) => cmd_gen(cli, args),
        Command::Classify { bundle } => cmd_classify(cli, bundle),
        Command::Check { bundle } => cmd_check(cli, bundle),
        Command::Synthesize { bundle } => cmd_synthesize(cli, bundle),
        Command::Verify { bundle, mechanism } => cmd_verify(cli, bundle, mechanism),
        Command::Witness { bundle, mechanism } => cmd_witness(cli, bundle, mechanism),
    }
}

fn emit(cli: &Cli, text: &str) -> anyhow::Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_report(cli: &Cli, value: &Value, md: impl FnOnce() -> String) -> anyhow::Result<()> {
    match cli.format {
        Format::Json => emit(cli, &to_canonical_json(value)),
        Format::Md => emit(cli, &md()),
    }
}

fn open_bundle(cli: &Cli, path: &Path) -> anyhow::Result<ProblemBundle> {
    let mut bundle = load_bundle(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(a) = cli.alpha {
        bundle.alpha = a;
    }
    let report = validate_bundle(&bundle, DEFAULT_VALIDATION_TOL)?;
    if !report.passed {
        bail!(
            "bundle violates the standing assumptions: redundant pairs {:?}, non-rationalizable actions {:?}",
            report.redundant_pairs,
            report.non_rationalizable.iter().map(|n| n.action).collect::<Vec<_>>()
        );
    }
    Ok(bundle)
}

fn spec_of(cli: &Cli) -> GridSpec {
    GridSpec { denominator: cli.grid, samples: cli.samples, seed: cli.seed, ..GridSpec::default() }
}

fn cmd_gen(cli: &Cli, args: &GenArgs) -> CmdResult {
    let mut params = Params::new();
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            params.insert(k.to_string(), v);
        }
    };
    put("n", args.n.map(|v| v.to_string()));
    put("theta", args.theta.map(|v| v.to_string()));
    put("s", args.s.map(|v| v.to_string()));
    put("r", args.r.clone());
    put("R", args.big_r.map(|v| v.to_string()));
    put("i", args.i.map(|v| v.to_string()));
    put("omega", args.omega.map(|v| v.to_string()));
    let mut bundle = gen_canonical(&args.name, &params)?;
    if let Some(a) = cli.alpha {
        bundle.alpha = a;
    }
    if let Some(kind) = &args.question {
        let mut qp = Params::new();
        for (k, v) in [("x", args.x.clone()), ("z", args.z.clone()), ("split", args.split.map(|v| v.to_string()))] {
            if let Some(v) = v {
                qp.insert(k.to_string(), v);
            }
        }
        let x = builtin_question(&bundle, kind, &qp)?;
        bundle = bundle.with_question(x)?;
        if let Value::Object(meta) = bundle.metadata.entry("question").or_insert(json!({})) {
            meta.insert("kind".into(), json!(kind));
            for (k, v) in &qp {
                meta.insert(k.clone(), json!(v));
            }
        }
    }
    emit(cli, &bundle_to_json(&bundle))?;
    Ok(code::OK)
}

/// Cycle enumeration in reports stops at this length and count.
const REPORT_CYCLE_LEN: usize = 6;
const REPORT_CYCLE_CAP: usize = 10_000;

fn cmd_classify(cli: &Cli, path: &Path) -> CmdResult {
    let bundle = open_bundle(cli, path)?;
    let graph = graph_for_bundle(&bundle, TIE_TOL)?;
    let class = classify_graph(&graph, bundle.product.as_ref());
    let labels = &bundle.problem.actions;
    let edges: Vec<Value> = graph
        .edges
        .iter()
        .map(|e| json!({"a": labels[e.a], "b": labels[e.b], "slack": e.slack}))
        .collect();
    let splitting = splitting_collections(&graph).ok().map(|c| {
        json!({
            "parts": c.parts.iter().map(|p| p.iter().map(|&a| labels[a].clone()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "splitting_actions": c.splitting_actions.iter().map(|&a| labels[a].clone()).collect::<Vec<_>>(),
        })
    });
    let cycles = enumerate_cycles(&graph, REPORT_CYCLE_LEN.min(graph.n), REPORT_CYCLE_CAP);
    let mut by_length = serde_json::Map::new();
    for c in &cycles.cycles {
        let e = by_length.entry(c.len().to_string()).or_insert(json!(0));
        *e = json!(e.as_u64().unwrap_or(0) + 1);
    }
    let report = json!({
        "class": class,
        "edges": edges,
        "splitting": splitting,
        "cycles": {
            "max_len": REPORT_CYCLE_LEN.min(graph.n),
            "count": cycles.cycles.len(),
            "by_length": by_length,
            "truncated": cycles.truncated,
        },
    });
    emit_report(cli, &report, || render::classification(&report))?;
    Ok(code::OK)
}

fn verdict_json(bundle: &ProblemBundle, tol: f64) -> anyhow::Result<(Status, Value)> {
    let graph = graph_for_bundle(bundle, TIE_TOL)?;
    let class = classify_graph(&graph, bundle.product.as_ref());
    let verdict = decide_incentivizable(bundle, &graph, tol)?;
    let mut value = serde_json::to_value(&verdict)?;
    value["graph"] = json!(class.kind);
    value["tol"] = json!(tol);
    Ok((verdict.status, value))
}

fn status_code(status: Status) -> u8 {
    match status {
        Status::Incentivizable => code::OK,
        Status::NotIncentivizable => code::NEGATIVE,
        Status::Inconclusive => code::INCONCLUSIVE,
    }
}

fn cmd_check(cli: &Cli, path: &Path) -> CmdResult {
    let bundle = open_bundle(cli, path)?;
    bundle.question()?;
    let (status, report) = verdict_json(&bundle, cli.tol)?;
    emit_report(cli, &report, || render::verdict(&report, &bundle))?;
    Ok(status_code(status))
}

fn cmd_synthesize(cli: &Cli, path: &Path) -> CmdResult {
    let bundle = open_bundle(cli, path)?;
    let graph = graph_for_bundle(&bundle, TIE_TOL)?;
    let verdict = decide_incentivizable(&bundle, &graph, cli.tol)?;
    let Some(cert) = verdict.certificate.as_ref() else {
        let detail = verdict
            .violation
            .as_ref()
            .map(|v| format!("{} violation on actions {:?} (relative residual {:.3e})", v.kind, v.actions, v.relative_residual))
            .unwrap_or_else(|| verdict.notes.join("; "));
        return Err(Failure {
            code: status_code(verdict.status).max(code::NEGATIVE),
            error: anyhow!("question is not certified incentivizable ({}): {detail}", verdict.theorem),
        });
    };
    let method = synthesize(&bundle, cert)?;
    let lottery = lottery_form(&method, &bundle.problem, bundle.alpha)?;
    emit(cli, &mechanism_to_json(&method, Some(&lottery)))?;
    Ok(code::OK)
}

fn open_pair(cli: &Cli, bundle: &Path, mechanism: &Path) -> anyhow::Result<(ProblemBundle, elicitkit::synth::ElicitationMethod)> {
    let b = open_bundle(cli, bundle)?;
    b.question()?;
    let text = std::fs::read_to_string(mechanism).with_context(|| format!("reading {}", mechanism.display()))?;
    let m = mechanism_from_json(&text).with_context(|| format!("loading {}", mechanism.display()))?.method;
    m.check_dims(b.problem.n_actions(), b.problem.n_states())?;
    Ok((b, m))
}

fn cmd_verify(cli: &Cli, bundle: &Path, mechanism: &Path) -> CmdResult {
    let (b, m) = open_pair(cli, bundle, mechanism)?;
    let report = verify_incentivizability(&b, &m, &spec_of(cli))?;
    let value = serde_json::to_value(&report)?;
    emit_report(cli, &value, || render::verification(&value))?;
    Ok(if report.passed { code::OK } else { code::NEGATIVE })
}

fn cmd_witness(cli: &Cli, bundle: &Path, mechanism: &Path) -> CmdResult {
    let (b, m) = open_pair(cli, bundle, mechanism)?;
    let spec = spec_of(cli);
    let witness = find_distortion_witness(&b, &m, &spec)?;
    let value = json!({ "found": witness.is_some(), "witness": witness, "spec": spec });
    emit_report(cli, &value, || render::witness(&value, &b))?;
    Ok(if witness.is_some() { code::OK } else { code::NOT_FOUND })
}
