//! Command-line driver.
//!
//! Exit codes: 0 success, 1 other failure, 2 input error, 3 guard exceeded,
//! 4 time limit hit with only a lower bound.

use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use conntest_core::endpoints::{median_seed, pick_endpoints};
use conntest_core::eval::{dp_oracle, evaluate, evaluate_exhaustive, evaluate_sampled, results_csv, EvaluationResult};
use conntest_core::exact::{solve, ExactConfig, ExactResult, SolveStatus};
use conntest_core::heuristics::HeuristicPolicy;
use conntest_core::ip::{FlatBackend, SolverBackend, StructuredBackend};
use conntest_core::{
    certificate_status, EdgeState, EvalError, GraphError, GraphInstance, Policy, PolicyError, SolveError, Status,
    TreeError,
};
use serde_json::{json, Value};
use thiserror::Error;

use crate::io::{read_graph, read_tree, IoError};
use crate::report::{certificate_json, instance_json};
use crate::SystemClock;

#[derive(Debug, Parser)]
#[command(name = "conntest", version, about = "Adaptive edge queries for s-t connectivity under a query budget")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal policy tree
    Exact(SolveArgs),
    /// Exact solver under a time limit, printing every lower bound
    LowerBound(SolveArgs),
    /// Play a heuristic against given answers and show the next proposal
    Heuristic {
        /// Heuristic spec, e.g. `h1`, `tree:5`, `mcts:3,1000,0.2,0`
        spec: String,
        #[command(flatten)]
        instance: InstanceArgs,
        /// Answers to the proposals so far, `1` On and `0` Off
        #[arg(long, default_value = "")]
        answers: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Expected query count of a heuristic spec or a policy-tree file
    Eval(EvalArgs),
    /// Optimal expected cost by dynamic programming over beliefs
    Oracle {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Seeded source and target selection
    Endpoints {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rank seeds 0..=10 by H1's cost at budget 10 and report the median
        #[arg(long)]
        median: bool,
        #[arg(long, default_value_t = 0.5)]
        prob: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Query-count histogram as `count,frequency` rows
    Hist(EvalArgs),
    /// Wizard HTTP service
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        addr: SocketAddr,
        /// Directory holding session snapshots
        #[arg(long, default_value = "sessions")]
        store: PathBuf,
        /// Per-step time limit for tree heuristics, in milliseconds
        #[arg(long, default_value_t = 2000)]
        step_time_limit: u64,
    },
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Source node; drawn from `--seed` together with the target when absent
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub budget: usize,
    #[arg(long, default_value_t = 0.5)]
    pub prob: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Also write the result as a JSON document
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Bnb,
    Flat,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Seconds
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long, value_enum, default_value_t = Backend::Bnb)]
    pub backend: Backend,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Exhaustive up to budget 25, sampled above
    Auto,
    Exhaustive,
    Sampled,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Heuristic spec or path to a policy-tree file
    pub policy: String,
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Guard(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Input(_) => 2,
            CliError::Guard(_) => 3,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<TreeError> for CliError {
    fn from(e: TreeError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::TooLarge { .. } => CliError::Guard(e.to_string()),
            SolveError::Graph(g) => g.into(),
            SolveError::Interrupted => CliError::Other(format!("{e}; no bound available")),
            SolveError::Infeasible => CliError::Other(e.to_string()),
        }
    }
}

impl From<PolicyError> for CliError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::Spec(_) => CliError::Input(e.to_string()),
            PolicyError::Graph(g) => g.into(),
            PolicyError::Solve(s) => s.into(),
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Guard { .. } => CliError::Guard(e.to_string()),
            EvalError::Policy(p) => p.into(),
            EvalError::Graph(g) => g.into(),
        }
    }
}

/// Exit code of a successful run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Finish {
    Ok,
    BoundOnly,
}

impl Finish {
    pub fn exit_code(self) -> u8 {
        match self {
            Finish::Ok => 0,
            Finish::BoundOnly => 4,
        }
    }
}

pub fn instance(args: &InstanceArgs) -> Result<GraphInstance, CliError> {
    let graph = Arc::new(read_graph(&args.graph)?);
    let (s, t) = match (&args.source, &args.target) {
        (Some(s), Some(t)) => {
            let id = |l: &str| graph.node_id(l).ok_or_else(|| GraphError::UnknownNodeLabel(l.into()));
            (id(s)?, id(t)?)
        }
        (None, None) => pick_endpoints(&graph, args.seed)?,
        _ => return Err(CliError::Input("give both --source and --target, or neither".into())),
    };
    Ok(GraphInstance::new(graph, s, t, args.prob, args.budget)?)
}

fn write_out(out: &OutArgs, doc: Value) -> Result<(), CliError> {
    if let Some(path) = &out.out {
        let text = serde_json::to_string_pretty(&doc).expect("json values serialize");
        std::fs::write(path, text + "\n").map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn solve_cmd(args: &SolveArgs, log: bool, w: &mut dyn std::io::Write) -> Result<Finish, CliError> {
    let g = instance(&args.instance)?;
    let mut config = ExactConfig::default();
    if let Some(secs) = args.time_limit {
        if !(secs >= 0.0) {
            return Err(CliError::Input(format!("invalid time limit {secs}")));
        }
        config.time_budget_ms = (secs * 1000.0) as u64;
    }
    let backend: Box<dyn SolverBackend> = match args.backend {
        Backend::Bnb => Box::new(StructuredBackend),
        Backend::Flat => Box::new(FlatBackend::default()),
    };
    if log {
        writeln!(w, "iter,cost,paths,cuts,nodes,ms").ok();
    }
    let clock = SystemClock::new();
    let result = solve(&g, &config, &*backend, &clock, &mut |r| {
        if log {
            writeln!(w, "{}", r.log_line()).ok();
            w.flush().ok();
        }
    })?;
    let status = match result.status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::LowerBoundOnly => "lower_bound_only",
    };
    if log {
        writeln!(w, "bound {} ({status})", result.cost).ok();
    } else {
        writeln!(w, "status {status}\ncost {}\ntree {}", result.cost, result.tree.to_text(&g.graph)).ok();
    }
    write_out(&args.out, exact_json(&g, &result))?;
    Ok(match result.status {
        SolveStatus::Optimal => Finish::Ok,
        SolveStatus::LowerBoundOnly => Finish::BoundOnly,
    })
}

fn exact_json(g: &GraphInstance, r: &ExactResult) -> Value {
    json!({
        "command": "exact",
        "instance": instance_json(g),
        "status": r.status,
        "cost": r.cost,
        "tree": r.tree.to_text(&g.graph),
        "iterations": r.reports,
        "paths": r.paths.iter().map(|c| certificate_json(&g.graph, c)).collect::<Vec<_>>(),
        "cuts": r.cuts.iter().map(|c| certificate_json(&g.graph, c)).collect::<Vec<_>>(),
    })
}

/// A heuristic spec, or a tree file when `policy` names an existing file.
fn policy(spec: &str, g: &GraphInstance) -> Result<(String, Box<dyn Policy>), CliError> {
    let path = Path::new(spec);
    if path.is_file() {
        let tree = read_tree(path, &g.graph, g.p)?;
        tree.check_well_formed(Some(g.budget))?;
        return Ok((path.display().to_string(), Box::new(tree)));
    }
    let h = HeuristicPolicy::parse(spec, g)?;
    Ok((h.name(), Box::new(h)))
}

fn eval_cmd(args: &EvalArgs) -> Result<(String, GraphInstance, EvaluationResult), CliError> {
    let g = instance(&args.instance)?;
    let (name, p) = policy(&args.policy, &g)?;
    let seed = args.instance.seed;
    let result = match args.method {
        MethodArg::Auto => evaluate(&*p, &g, seed)?,
        MethodArg::Exhaustive => evaluate_exhaustive(&*p, &g)?,
        MethodArg::Sampled => evaluate_sampled(&*p, &g, seed)?,
    };
    Ok((name, g, result))
}

fn heuristic_cmd(spec: &str, args: &InstanceArgs, answers: &str) -> Result<(String, Value), CliError> {
    let g = instance(args)?;
    let h = HeuristicPolicy::parse(spec, &g)?;
    let mut bits = Vec::new();
    for c in answers.chars().filter(|c| !c.is_whitespace() && *c != ',') {
        match c {
            '1' => bits.push(true),
            '0' => bits.push(false),
            other => return Err(CliError::Input(format!("answer `{other}` is not 0 or 1"))),
        }
    }
    let mut text = String::new();
    let mut steps = Vec::new();
    let mut b = g.fresh_belief();
    let mut bits = bits.into_iter();
    let (status, next) = loop {
        let status = certificate_status(&g, &b)?;
        let remaining = g.budget - steps.len();
        if !status.is_open() || remaining == 0 {
            break (status, None);
        }
        let prop = h.propose(&g, &b, remaining)?.ok_or(PolicyError::NotOpen)?;
        let label = g.graph.edge_label(prop.edge).to_string();
        let Some(on) = bits.next() else {
            break (status, Some((label, prop.fallback)));
        };
        writeln!(text, "{} {label} {}", steps.len() + 1, if on { "on" } else { "off" }).unwrap();
        steps.push(json!({ "edge": label, "answer": if on { "on" } else { "off" }, "fallback": prop.fallback }));
        b.reveal(prop.edge, EdgeState::from_answer(on))?;
    };
    if bits.next().is_some() {
        return Err(CliError::Input("more answers than queries".into()));
    }
    let status_name = match &status {
        Status::PathFound(_) => "path_found",
        Status::CutFound(_) => "cut_found",
        Status::Open if next.is_none() => "budget_exhausted",
        Status::Open => "open",
    };
    match (&next, status.certificate()) {
        (Some((e, _)), _) => writeln!(text, "next {e}").unwrap(),
        (None, Some(c)) => writeln!(text, "{status_name} {}", c.display(&g.graph)).unwrap(),
        (None, None) => writeln!(text, "{status_name}").unwrap(),
    }
    let doc = json!({
        "command": "heuristic",
        "heuristic": h.name(),
        "instance": instance_json(&g),
        "transcript": steps,
        "status": status_name,
        "certificate": status.certificate().map(|c| certificate_json(&g.graph, c)),
        "pending": next.map(|(e, fallback)| json!({ "edge": e, "fallback": fallback })),
    });
    Ok((text, doc))
}

/// Runs one command, writing human-readable output to `w`.
pub fn run(cli: Cli, w: &mut dyn std::io::Write) -> Result<Finish, CliError> {
    match cli.command {
        Command::Exact(args) => solve_cmd(&args, false, w),
        Command::LowerBound(args) => solve_cmd(&args, true, w),
        Command::Heuristic {
            spec,
            instance,
            answers,
            out,
        } => {
            let (text, doc) = heuristic_cmd(&spec, &instance, &answers)?;
            write!(w, "{text}").ok();
            write_out(&out, doc)?;
            Ok(Finish::Ok)
        }
        Command::Eval(args) => {
            let (name, g, result) = eval_cmd(&args)?;
            write!(w, "{}", results_csv([(name.as_str(), &result)])).ok();
            let doc = json!({ "command": "eval", "policy": name, "instance": instance_json(&g), "result": result });
            write_out(&args.out, doc)?;
            Ok(Finish::Ok)
        }
        Command::Hist(args) => {
            let (name, g, result) = eval_cmd(&args)?;
            write!(w, "{}", result.histogram_csv()).ok();
            let doc = json!({ "command": "hist", "policy": name, "instance": instance_json(&g), "result": result });
            write_out(&args.out, doc)?;
            Ok(Finish::Ok)
        }
        Command::Oracle { instance: args, out } => {
            let g = instance(&args)?;
            let cost = dp_oracle(&g)?;
            writeln!(w, "{cost}").ok();
            write_out(&out, json!({ "command": "oracle", "instance": instance_json(&g), "cost": cost }))?;
            Ok(Finish::Ok)
        }
        Command::Endpoints {
            graph,
            seed,
            median,
            prob,
            out,
        } => {
            let g = Arc::new(read_graph(&graph)?);
            let doc = if median {
                if !(prob > 0.0 && prob < 1.0) {
                    return Err(GraphError::Probability(prob).into());
                }
                let (mid, rows) = median_seed(g.clone(), prob)?;
                writeln!(w, "seed,source,target,cost").ok();
                let mut seeds = Vec::new();
                for r in &rows {
                    let (s, t) = (g.node_label(r.source), g.node_label(r.sink));
                    writeln!(w, "{},{s},{t},{}", r.seed, r.cost).ok();
                    seeds.push(json!({ "seed": r.seed, "source": s, "target": t, "cost": r.cost }));
                }
                writeln!(w, "median seed {}", rows[mid].seed).ok();
                json!({ "command": "endpoints", "median_seed": rows[mid].seed, "seeds": seeds })
            } else {
                let (s, t) = pick_endpoints(&g, seed)?;
                let (s, t) = (g.node_label(s), g.node_label(t));
                writeln!(w, "{s} {t}").ok();
                json!({ "command": "endpoints", "seed": seed, "source": s, "target": t })
            };
            write_out(&out, doc)?;
            Ok(Finish::Ok)
        }
        Command::Serve {
            addr,
            store,
            step_time_limit,
        } => {
            let config = crate::service::ServiceConfig {
                store,
                step_time_limit_ms: step_time_limit,
            };
            crate::service::serve(addr, config).map_err(|e| CliError::Other(e.to_string()))?;
            Ok(Finish::Ok)
        }
    }
}

/// Entry point for the binary.
pub fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(finish) => finish.exit_code().into(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code().into()
        }
    }
}
