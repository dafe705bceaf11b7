//! The `opaque-planner` command-line front end.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::automata::{dfa_to_dot, nfa_to_dot, Dfa};
use crate::io::{self, DfaJson, PolicyFile, RunManifest, StateKey};
use crate::ltlf::{ltlf_to_dfa, parse_ltlf};
use crate::model::{LabelSet, Model, ObsSymbol};
use crate::planner::{self, export_lp, product_mdp, LpStatus, Mode, PlanOptions, ProductMdp};
use crate::scenarios::{self, GridworldConfig};
use crate::simulate::{
    default_horizon, rollout_with_threads, verify_opaque_dfa, RolloutStats, VerifyReport,
};
use crate::transducer::{
    build_obs_fst, opaque_obs_dfa, output_nfa, product_fst, IntersectionOrder, OpaqueStats,
    OutputSide,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_DISCREPANCY: u8 = 4;

/// Opacity-enforcing planning for probabilistic systems.
#[derive(Parser, Debug)]
#[command(name = "opaque-planner", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the opaque-observation DFA of a secret.
    Build(BuildArgs),
    /// Solve the occupancy LP and write the policy.
    Plan(PlanArgs),
    /// Estimate opacity and task probabilities by Monte Carlo rollouts.
    Simulate(SimulateArgs),
    /// Cross-check the opaque DFA against brute-force enumeration.
    Verify(VerifyArgs),
    /// Emit the model JSON of a built-in scenario.
    Scenario(ScenarioArgs),
    /// Write the occupancy LP in CPLEX LP format.
    ExportLp(ExportLpArgs),
    /// Render an intermediate structure as Graphviz dot.
    ExportDot(ExportDotArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScenarioName {
    #[value(alias = "running-example")]
    Running,
    Gridworld,
}

impl ScenarioName {
    fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Running => "running",
            ScenarioName::Gridworld => "gridworld",
        }
    }

    fn default_task(self) -> &'static str {
        match self {
            ScenarioName::Running => "F s4",
            ScenarioName::Gridworld => "F C",
        }
    }

    fn default_secret(self) -> &'static str {
        match self {
            ScenarioName::Running => "F s6",
            ScenarioName::Gridworld => "F B & F A",
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct ModelArgs {
    /// Model JSON file.
    #[arg(
        long,
        conflicts_with = "scenario",
        required_unless_present = "scenario"
    )]
    pub model: Option<PathBuf>,
    /// Built-in scenario instead of a model file.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioName>,
    /// Gridworld configuration JSON.
    #[arg(long, requires = "scenario")]
    pub config: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
pub struct SecretArgs {
    /// Secret as an LTLf formula or a DFA JSON file.
    #[arg(long)]
    pub secret: Option<String>,
    /// Precomputed opaque-observation DFA (output of `build`).
    #[arg(long, conflicts_with = "secret")]
    pub opaque: Option<PathBuf>,
    /// Order of intersection and determinization.
    #[arg(long, value_enum, default_value = "nfa")]
    pub order: OrderArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    Nfa,
    Dfa,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Opacity,
    Transparency,
    TransparencyLiteral,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Opacity => Mode::Opacity,
            ModeArg::Transparency => Mode::Transparency,
            ModeArg::TransparencyLiteral => Mode::TransparencyLiteral,
        }
    }
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[command(flatten)]
    pub input: ModelArgs,
    /// Secret as an LTLf formula or a DFA JSON file.
    #[arg(long)]
    pub secret: Option<String>,
    #[arg(long, value_enum, default_value = "nfa")]
    pub order: OrderArg,
    /// Where to write the opaque DFA.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    #[command(flatten)]
    pub input: ModelArgs,
    /// Task as an LTLf formula or a DFA JSON file.
    #[arg(long)]
    pub task: Option<String>,
    #[command(flatten)]
    pub secret: SecretArgs,
    /// Lower bound on the task-satisfaction probability.
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value = "opacity")]
    pub mode: ModeArg,
    /// Where to write the policy.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: ModelArgs,
    /// Policy JSON written by `plan`.
    #[arg(long)]
    pub policy: PathBuf,
    /// Task; defaults to the one recorded in the policy.
    #[arg(long)]
    pub task: Option<String>,
    #[command(flatten)]
    pub secret: SecretArgs,
    #[arg(long, default_value_t = 5000)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Step limit per run; defaults to ten times the number of states.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Where to write the statistics.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: ModelArgs,
    /// Secret as an LTLf formula or a DFA JSON file.
    #[arg(long)]
    pub secret: Option<String>,
    /// Opaque DFA to check; built from the secret when absent.
    #[arg(long)]
    pub opaque: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "nfa")]
    pub order: OrderArg,
    /// Longest interior action sequence enumerated.
    #[arg(long, default_value_t = 4)]
    pub max_actions: usize,
    /// Where to write the report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScenarioArgs {
    #[arg(value_enum)]
    pub name: ScenarioName,
    /// Gridworld configuration JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the gridworld configuration instead of the model.
    #[arg(long)]
    pub print_config: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExportLpArgs {
    #[command(flatten)]
    pub input: ModelArgs,
    #[arg(long)]
    pub task: Option<String>,
    #[command(flatten)]
    pub secret: SecretArgs,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value = "opacity")]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DotTarget {
    Fst,
    ProductFst,
    SatisfyingNfa,
    ViolatingNfa,
    Opaque,
    Task,
    Secret,
}

#[derive(Args, Debug)]
pub struct ExportDotArgs {
    #[command(flatten)]
    pub input: ModelArgs,
    #[arg(long, value_enum)]
    pub what: DotTarget,
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub secret: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Contents of the file written by `build`.
#[derive(Debug, Serialize, Deserialize)]
pub struct OpaqueFile {
    pub manifest: RunManifest,
    pub stats: serde_json::Value,
    pub dfa: DfaJson,
}

#[derive(Debug, Serialize)]
struct SimulationFile<'a> {
    manifest: RunManifest,
    policy: &'a io::PolicyMetadata,
    stats: RolloutStats,
}

#[derive(Debug, Serialize)]
struct VerifyFile {
    manifest: RunManifest,
    report: VerifyReport,
}

fn manifest(command: &str, input: &ModelArgs) -> RunManifest {
    RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        model: input.model.as_ref().map(|p| p.display().to_string()),
        scenario: input.scenario.map(|s| match &input.config {
            Some(c) => format!("{} ({})", s.as_str(), c.display()),
            None => s.as_str().to_string(),
        }),
        ..RunManifest::default()
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = read(path)?;
    serde_json::from_str(&text).with_context(|| format!("{}: invalid JSON", path.display()))
}

fn gridworld_config(path: Option<&Path>) -> anyhow::Result<GridworldConfig> {
    let cfg = match path {
        Some(p) => parse_json(p)?,
        None => GridworldConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load_model(input: &ModelArgs) -> anyhow::Result<Model> {
    if let Some(path) = &input.model {
        let text = read(path)?;
        return io::model_from_json(&text)
            .with_context(|| format!("{}: invalid model", path.display()));
    }
    match input.scenario {
        Some(ScenarioName::Running) => {
            if input.config.is_some() {
                bail!("--config applies to the gridworld scenario only");
            }
            Ok(scenarios::running_example())
        }
        Some(ScenarioName::Gridworld) => Ok(scenarios::gridworld(&gridworld_config(
            input.config.as_deref(),
        )?)?),
        None => bail!("either --model or --scenario is required"),
    }
}

fn formula_or_default(
    given: &Option<String>,
    input: &ModelArgs,
    task: bool,
) -> anyhow::Result<String> {
    match (given, input.scenario) {
        (Some(f), _) => Ok(f.clone()),
        (None, Some(s)) => Ok(if task {
            s.default_task()
        } else {
            s.default_secret()
        }
        .to_string()),
        (None, None) => bail!(
            "--{} is required with --model",
            if task { "task" } else { "secret" }
        ),
    }
}

/// A formula, or a path to a DFA JSON file when such a file exists.
fn label_dfa(spec: &str, model: &Model) -> anyhow::Result<Dfa<LabelSet>> {
    let path = Path::new(spec);
    if path.is_file() {
        let dj: DfaJson = parse_json(path)?;
        return dj
            .build()
            .with_context(|| format!("{}: invalid DFA", path.display()));
    }
    let formula = parse_ltlf(spec).with_context(|| format!("cannot parse formula `{spec}`"))?;
    Ok(ltlf_to_dfa(
        &formula,
        &model.label_alphabet(),
        model.atomic_props(),
    )?)
}

fn order(o: OrderArg) -> IntersectionOrder {
    match o {
        OrderArg::Nfa => IntersectionOrder::NfaProduct,
        OrderArg::Dfa => IntersectionOrder::DfaProduct,
    }
}

fn build_opaque(
    model: &Model,
    secret: &str,
    o: OrderArg,
) -> anyhow::Result<(Dfa<ObsSymbol>, OpaqueStats)> {
    let dfa = label_dfa(secret, model)?;
    let built = opaque_obs_dfa(model, &dfa, order(o))?;
    if built.dfa.is_empty_language() {
        log::warn!("no observation is opaque for secret `{secret}`");
    }
    Ok((built.dfa, built.stats))
}

fn load_opaque(path: &Path) -> anyhow::Result<Dfa<ObsSymbol>> {
    let text = read(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{}: invalid JSON", path.display()))?;
    let dj: DfaJson = if value.get("dfa").is_some() {
        serde_json::from_value::<OpaqueFile>(value)?.dfa
    } else {
        serde_json::from_value(value)?
    };
    dj.build()
        .with_context(|| format!("{}: invalid opaque DFA", path.display()))
}

/// Task DFA, opaque DFA and their product with the model.
struct Pipeline {
    model: Model,
    task: Dfa<LabelSet>,
    opaque: Dfa<ObsSymbol>,
    pm: ProductMdp,
}

fn pipeline(
    model: Model,
    task: &str,
    secret: Option<&str>,
    opaque: Option<&Path>,
    o: OrderArg,
) -> anyhow::Result<Pipeline> {
    let task = label_dfa(task, &model)?;
    let opaque = match (opaque, secret) {
        (Some(p), _) => load_opaque(p)?,
        (None, Some(s)) => build_opaque(&model, s, o)?.0,
        (None, None) => bail!("a secret or an opaque DFA is required"),
    };
    let pm = product_mdp(&model, &task, &opaque)?;
    log::info!(
        "product MDP: {} states, {} transitions",
        pm.num_states(),
        pm.num_transitions()
    );
    Ok(Pipeline {
        model,
        task,
        opaque,
        pm,
    })
}

fn planning_pipeline(
    input: &ModelArgs,
    task: &Option<String>,
    secret: &SecretArgs,
    m: &mut RunManifest,
) -> anyhow::Result<Pipeline> {
    let model = load_model(input)?;
    let task = formula_or_default(task, input, true)?;
    let secret_spec = match &secret.opaque {
        Some(_) => None,
        None => Some(formula_or_default(&secret.secret, input, false)?),
    };
    m.task = Some(task.clone());
    m.secret = secret_spec.clone();
    m.opaque = secret.opaque.as_ref().map(|p| p.display().to_string());
    pipeline(
        model,
        &task,
        secret_spec.as_deref(),
        secret.opaque.as_deref(),
        secret.order,
    )
}

fn write_output(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn record_out(m: &mut RunManifest, out: &Option<PathBuf>) {
    if let Some(p) = out {
        m.outputs.push(p.display().to_string());
    }
}

pub fn cmd_build(args: &BuildArgs) -> anyhow::Result<u8> {
    let mut m = manifest("build", &args.input);
    let model = load_model(&args.input)?;
    let secret = formula_or_default(&args.secret, &args.input, false)?;
    m.secret = Some(secret.clone());
    record_out(&mut m, &args.out);
    let (dfa, stats) = build_opaque(&model, &secret, args.order)?;
    println!(
        "opaque DFA: {} states (nfa {}, dfa {}, minimized {}) in {:.4} s",
        dfa.num_states(),
        stats.nfa_states,
        stats.dfa_states,
        stats.minimized_states,
        stats.seconds
    );
    if let Some(out) = &args.out {
        let file = OpaqueFile {
            manifest: m,
            stats: serde_json::to_value(&stats)?,
            dfa: io::dfa_to_json(&dfa),
        };
        write_output(Some(out), &to_json(&file))?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_plan(args: &PlanArgs) -> anyhow::Result<u8> {
    let mut m = manifest("plan", &args.input);
    m.epsilon = Some(args.epsilon);
    let mode = Mode::from(args.mode);
    m.mode = Some(mode.to_string());
    record_out(&mut m, &args.out);
    let p = planning_pipeline(&args.input, &args.task, &args.secret, &mut m)?;
    let result = planner::plan(&p.pm, args.epsilon, mode, &PlanOptions::default())?;
    let sol = &result.solution;
    match sol.status {
        LpStatus::Infeasible => {
            let hint = sol
                .max_feasible_epsilon
                .map_or("unknown".to_string(), |e| format!("{e:.4}"));
            eprintln!(
                "infeasible: the task probability cannot reach {}; maximal feasible epsilon {hint}",
                args.epsilon
            );
            return Ok(EXIT_INFEASIBLE);
        }
        LpStatus::NumericalFailure => {
            eprintln!("numerical failure in the LP solver");
            return Ok(EXIT_NUMERICAL);
        }
        LpStatus::Optimal => {}
    }
    println!(
        "{:<22} {:>8} {:>10} {:>8}",
        "mode", "epsilon", "objective", "task"
    );
    println!(
        "{:<22} {:>8.4} {:>10.4} {:>8.4}",
        mode.to_string(),
        args.epsilon,
        sol.objective,
        sol.task_probability
    );
    if let Some(out) = &args.out {
        let key = StateKey {
            model: &p.model,
            task: &p.task,
            opaque: &p.opaque,
        };
        let policy = result
            .policy
            .as_ref()
            .expect("optimal plans carry a policy");
        let file = key.policy_file(&p.pm, policy, sol, args.epsilon, &mode.to_string(), m);
        write_output(Some(out), &to_json(&file))?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_simulate(args: &SimulateArgs) -> anyhow::Result<u8> {
    let mut m = manifest("simulate", &args.input);
    let file: PolicyFile = parse_json(&args.policy)?;
    let recorded = &file.manifest;
    m.policy = Some(args.policy.display().to_string());
    m.seed = Some(args.seed);
    m.runs = Some(args.runs);
    m.epsilon = Some(file.metadata.epsilon);
    m.mode = Some(file.metadata.mode.clone());
    record_out(&mut m, &args.out);
    let task = args.task.clone().or_else(|| recorded.task.clone());
    let secret = args
        .secret
        .secret
        .clone()
        .or_else(|| recorded.secret.clone());
    let opaque = args
        .secret
        .opaque
        .clone()
        .or_else(|| recorded.opaque.clone().map(PathBuf::from));
    let task = formula_or_default(&task, &args.input, true)?;
    let (secret, opaque) = match (opaque, secret) {
        (Some(o), _) if args.secret.secret.is_none() => (None, Some(o)),
        (_, s) => (Some(formula_or_default(&s, &args.input, false)?), None),
    };
    m.task = Some(task.clone());
    m.secret = secret.clone();
    m.opaque = opaque.as_ref().map(|p| p.display().to_string());
    let model = load_model(&args.input)?;
    let p = pipeline(
        model,
        &task,
        secret.as_deref(),
        opaque.as_deref(),
        args.secret.order,
    )?;
    let key = StateKey {
        model: &p.model,
        task: &p.task,
        opaque: &p.opaque,
    };
    let policy = key.apply(&p.pm, &file)?;
    let horizon = args.horizon.unwrap_or_else(|| default_horizon(&p.model));
    m.horizon = Some(horizon);
    let threads = args
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        bail!("--threads must be at least 1");
    }
    let stats = rollout_with_threads(&p.pm, &policy, args.runs, args.seed, horizon, threads)?;
    println!(
        "{:>8} {:>10} {:>8} {:>8} {:>8} {:>6}",
        "epsilon", "objective", "exp_ph", "exp_pt", "exp_task", "runs"
    );
    println!(
        "{:>8.4} {:>10.4} {:>8.4} {:>8.4} {:>8.4} {:>6}",
        file.metadata.epsilon,
        file.metadata.objective,
        stats.ph,
        stats.pt,
        stats.p_task,
        stats.runs
    );
    if stats.horizon_truncated > 0 {
        log::warn!(
            "{} runs hit the horizon of {horizon} steps",
            stats.horizon_truncated
        );
    }
    if let Some(out) = &args.out {
        let sim = SimulationFile {
            manifest: m,
            policy: &file.metadata,
            stats,
        };
        write_output(Some(out), &to_json(&sim))?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify(args: &VerifyArgs) -> anyhow::Result<u8> {
    let mut m = manifest("verify", &args.input);
    m.max_actions = Some(args.max_actions);
    record_out(&mut m, &args.out);
    let model = load_model(&args.input)?;
    let secret = formula_or_default(&args.secret, &args.input, false)?;
    m.secret = Some(secret.clone());
    m.opaque = args.opaque.as_ref().map(|p| p.display().to_string());
    let secret_dfa = label_dfa(&secret, &model)?;
    let opaque = match &args.opaque {
        Some(p) => load_opaque(p)?,
        None => opaque_obs_dfa(&model, &secret_dfa, order(args.order))?.dfa,
    };
    let report = verify_opaque_dfa(&model, &secret_dfa, &opaque, args.max_actions)?;
    println!(
        "max_actions {}: {} plays, {} observation words, {} opaque words, {} discrepancies",
        report.max_actions,
        report.plays,
        report.words,
        report.opaque_words,
        report.discrepancies.len()
    );
    for d in &report.discrepancies {
        println!(
            "counterexample {}: oracle {}, dfa {}",
            d.word,
            if d.oracle_opaque {
                "opaque"
            } else {
                "not opaque"
            },
            if d.dfa_opaque { "accepts" } else { "rejects" }
        );
    }
    let code = if report.discrepancies.is_empty() {
        EXIT_OK
    } else {
        EXIT_DISCREPANCY
    };
    if let Some(out) = &args.out {
        write_output(
            Some(out),
            &to_json(&VerifyFile {
                manifest: m,
                report,
            }),
        )?;
    }
    Ok(code)
}

pub fn cmd_scenario(args: &ScenarioArgs) -> anyhow::Result<u8> {
    let text = match (args.name, args.print_config) {
        (ScenarioName::Gridworld, true) => to_json(&gridworld_config(args.config.as_deref())?),
        (ScenarioName::Running, true) => bail!("the running example has no configuration"),
        (ScenarioName::Running, false) => io::model_to_json(&scenarios::running_example()),
        (ScenarioName::Gridworld, false) => io::model_to_json(&scenarios::gridworld(
            &gridworld_config(args.config.as_deref())?,
        )?),
    };
    write_output(args.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

pub fn cmd_export_lp(args: &ExportLpArgs) -> anyhow::Result<u8> {
    let mut m = manifest("export-lp", &args.input);
    let p = planning_pipeline(&args.input, &args.task, &args.secret, &mut m)?;
    if !args.epsilon.is_finite() || args.epsilon < 0.0 {
        bail!("epsilon must be ≥ 0, got {}", args.epsilon);
    }
    let problem = planner::build_lp(
        &p.pm,
        args.epsilon,
        args.mode.into(),
        PlanOptions::default().upper_bound,
    );
    write_output(args.out.as_deref(), &export_lp(&problem.lp))?;
    Ok(EXIT_OK)
}

fn label_letter(l: &LabelSet) -> String {
    format!("{{{}}}", l.iter().cloned().collect::<Vec<_>>().join(","))
}

pub fn cmd_export_dot(args: &ExportDotArgs) -> anyhow::Result<u8> {
    let model = load_model(&args.input)?;
    let secret = || -> anyhow::Result<Dfa<LabelSet>> {
        label_dfa(
            &formula_or_default(&args.secret, &args.input, false)?,
            &model,
        )
    };
    let text = match args.what {
        DotTarget::Fst => build_obs_fst(&model)?.to_dot(),
        DotTarget::ProductFst => {
            product_fst(&model, &build_obs_fst(&model)?, &secret()?)?.to_dot(&model)
        }
        DotTarget::SatisfyingNfa | DotTarget::ViolatingNfa => {
            let pf = product_fst(&model, &build_obs_fst(&model)?, &secret()?)?;
            let side = if args.what == DotTarget::SatisfyingNfa {
                OutputSide::Satisfying
            } else {
                OutputSide::Violating
            };
            nfa_to_dot(&output_nfa(&pf, side), ToString::to_string)
        }
        DotTarget::Opaque => {
            let dfa = opaque_obs_dfa(&model, &secret()?, IntersectionOrder::NfaProduct)?.dfa;
            dfa_to_dot(&dfa, ToString::to_string)
        }
        DotTarget::Task => {
            let task = label_dfa(&formula_or_default(&args.task, &args.input, true)?, &model)?;
            dfa_to_dot(&task, label_letter)
        }
        DotTarget::Secret => dfa_to_dot(&secret()?, label_letter),
    };
    write_output(args.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

pub fn run(cli: &Cli) -> anyhow::Result<u8> {
    match &cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Scenario(a) => cmd_scenario(a),
        Command::ExportLp(a) => cmd_export_lp(a),
        Command::ExportDot(a) => cmd_export_dot(a),
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> u8 {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OPAQUE_PLANNER_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_INPUT
        }
    }
}
