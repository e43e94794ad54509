//! Seeded sweeps over methods, tasks and seeds with Success and SPL.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::executive::{run_episode, EpisodeResult, ExecConfig, PerceptionOracle, Termination, TraceStep, DEFAULT_BUDGET};
use crate::planner::PlannerConfig;
use crate::sim::oracles::{GroundTruthOracle, NoisyOracle, ReplayOracle};
use crate::sim::{load_task, LoadedTask, SimError, StepOutcome, TransitionGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bklva,
    Random,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Bklva => "bklva",
            Method::Random => "random",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bklva" => Ok(Method::Bklva),
            "random" => Ok(Method::Random),
            _ => Err(format!("unknown method `{s}` (expected bklva or random)")),
        }
    }
}

/// `ground-truth`, `noisy:<p_flip>,<p_abstain>` or `replay:<trace file>`.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleSpec {
    GroundTruth,
    Noisy { p_flip: f64, p_abstain: f64 },
    Replay(String),
}

impl fmt::Display for OracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleSpec::GroundTruth => f.write_str("ground-truth"),
            OracleSpec::Noisy { p_flip, p_abstain } => write!(f, "noisy:{p_flip},{p_abstain}"),
            OracleSpec::Replay(path) => write!(f, "replay:{path}"),
        }
    }
}

impl FromStr for OracleSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ground-truth" {
            return Ok(OracleSpec::GroundTruth);
        }
        if let Some(rest) = s.strip_prefix("noisy:") {
            let (a, b) = rest.split_once(',').unwrap_or((rest, "0"));
            let p = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("bad probability `{x}`: {e}"));
            return Ok(OracleSpec::Noisy {
                p_flip: p(a)?,
                p_abstain: p(b)?,
            });
        }
        if let Some(path) = s.strip_prefix("replay:") {
            return Ok(OracleSpec::Replay(path.to_string()));
        }
        Err(format!("unknown oracle `{s}`"))
    }
}

impl OracleSpec {
    /// Builds the oracle for one episode. Replay reads its trace file.
    pub fn build(&self, seed: u64) -> Result<Box<dyn PerceptionOracle + Send>, SimError> {
        Ok(match self {
            OracleSpec::GroundTruth => Box::new(GroundTruthOracle),
            OracleSpec::Noisy { p_flip, p_abstain } => Box::new(NoisyOracle::new(*p_flip, *p_abstain, seed)?),
            OracleSpec::Replay(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| SimError::Invalid(format!("cannot read {path}: {e}")))?;
                Box::new(ReplayOracle::from_trace(&text)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub tasks: Vec<String>,
    pub methods: Vec<Method>,
    /// Seeds run are `0..seeds`.
    pub seeds: u64,
    pub budget: usize,
    pub oracle: OracleSpec,
    pub planner: PlannerConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            tasks: crate::sim::TASK_NAMES.iter().map(|s| s.to_string()).collect(),
            methods: vec![Method::Bklva, Method::Random],
            seeds: 10,
            budget: DEFAULT_BUDGET,
            oracle: OracleSpec::GroundTruth,
            planner: PlannerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeRecord {
    pub method: Method,
    pub task: String,
    pub seed: u64,
    pub variant: usize,
    pub success: bool,
    pub steps: usize,
    pub replans: usize,
    pub termination: Termination,
    pub optimal: usize,
    pub spl: f64,
    /// Set when the episode could not be run at all.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub method: Method,
    pub task: String,
    pub seeds: usize,
    pub success_rate: f64,
    pub spl_mean: f64,
    pub spl_std: f64,
    pub mean_steps: f64,
    pub mean_replans: f64,
}

/// Per-episode SPL: `S · L* / max(L, L*)`.
pub fn spl_one(success: bool, steps: usize, optimal: usize) -> f64 {
    if !success {
        return 0.0;
    }
    optimal as f64 / steps.max(optimal) as f64
}

/// Mean and population standard deviation of per-episode SPL.
pub fn spl(results: &[EpisodeResult], optimal: usize) -> (f64, f64) {
    let v: Vec<f64> = results.iter().map(|r| spl_one(r.success, r.steps, optimal)).collect();
    mean_std(&v)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Uniform choice among the actions executable in the true state, which
/// are the outgoing edges of the current node.
pub fn random_baseline(graph: &TransitionGraph, seed: u64, budget: usize) -> EpisodeResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut node = graph.initial();
    let mut steps = 0;
    let mut trace = Vec::new();
    let termination = loop {
        if graph.is_goal(node) {
            break Termination::Goal;
        }
        if steps >= budget {
            break Termination::StepBudget;
        }
        let out = graph.outgoing(node);
        if out.is_empty() {
            break Termination::Stuck;
        }
        let (label, _, _) = out[rng.gen_range(0..out.len())];
        let (outcome, next) = graph.step(node, label);
        steps += 1;
        trace.push(TraceStep {
            step: steps,
            action: Some(label.to_string()),
            env_action: Some(label.to_string()),
            outcome: Some(outcome),
            added: Vec::new(),
            removed: Vec::new(),
            new_objects: Vec::new(),
            replan: false,
            answers: Default::default(),
        });
        node = next;
        if outcome == StepOutcome::Illegal {
            break Termination::IllegalTransition;
        }
    };
    EpisodeResult {
        success: termination == Termination::Goal,
        steps,
        replans: 0,
        termination,
        trace,
        final_belief: None,
    }
}

/// One agent episode on a loaded task variant.
pub fn run_bklva(lt: &LoadedTask, oracle: &mut dyn PerceptionOracle, config: &ExecConfig) -> Result<EpisodeResult, SimError> {
    let b = lt.task.initial_belief()?;
    let mut env = lt.env();
    Ok(run_episode(&mut env, oracle, &lt.task.domain, &b, &lt.task.goal, config))
}

pub fn run_one(config: &BenchConfig, method: Method, task: &str, seed: u64) -> EpisodeRecord {
    let attempt = || -> Result<(usize, usize, EpisodeResult), SimError> {
        let lt = load_task(task, seed)?;
        let r = match method {
            Method::Random => random_baseline(&lt.graph, seed, config.budget),
            Method::Bklva => {
                let mut oracle = config.oracle.build(seed)?;
                let exec = ExecConfig {
                    budget: config.budget,
                    planner: config.planner,
                };
                run_bklva(&lt, oracle.as_mut(), &exec)?
            }
        };
        Ok((lt.variant, lt.optimal_length(), r))
    };
    match attempt() {
        Ok((variant, optimal, r)) => EpisodeRecord {
            method,
            task: task.to_string(),
            seed,
            variant,
            success: r.success,
            steps: r.steps,
            replans: r.replans,
            termination: r.termination,
            optimal,
            spl: spl_one(r.success, r.steps, optimal),
            error: None,
        },
        Err(e) => EpisodeRecord {
            method,
            task: task.to_string(),
            seed,
            variant: 0,
            success: false,
            steps: 0,
            replans: 0,
            termination: Termination::Infeasible,
            optimal: 0,
            spl: 0.0,
            error: Some(e.to_string()),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<MetricsRow>,
    pub episodes: Vec<EpisodeRecord>,
}

pub fn aggregate(method: Method, task: &str, eps: &[EpisodeRecord]) -> MetricsRow {
    let n = eps.len().max(1) as f64;
    let spls: Vec<f64> = eps.iter().map(|e| e.spl).collect();
    let (spl_mean, spl_std) = mean_std(&spls);
    MetricsRow {
        method,
        task: task.to_string(),
        seeds: eps.len(),
        success_rate: eps.iter().filter(|e| e.success).count() as f64 / n,
        spl_mean,
        spl_std,
        mean_steps: eps.iter().map(|e| e.steps as f64).sum::<f64>() / n,
        mean_replans: eps.iter().map(|e| e.replans as f64).sum::<f64>() / n,
    }
}

/// Runs every (method, task, seed); episodes run in parallel and are
/// ordered by seed before aggregation.
pub fn run_bench(config: &BenchConfig) -> BenchReport {
    let mut rows = Vec::new();
    let mut episodes = Vec::new();
    for &method in &config.methods {
        for task in &config.tasks {
            let mut eps: Vec<EpisodeRecord> = (0..config.seeds)
                .into_par_iter()
                .map(|seed| run_one(config, method, task, seed))
                .collect();
            eps.sort_by_key(|e| e.seed);
            rows.push(aggregate(method, task, &eps));
            episodes.extend(eps);
        }
    }
    BenchReport { rows, episodes }
}

pub const CSV_HEADER: &str = "method,task,seeds,success_rate,spl_mean,spl_std,mean_steps,mean_replans";

pub fn to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.4},{:.4},{:.4},{:.2},{:.2}",
            r.method, r.task, r.seeds, r.success_rate, r.spl_mean, r.spl_std, r.mean_steps, r.mean_replans
        )
        .expect("write to string");
    }
    out
}

pub fn format_table(rows: &[MetricsRow]) -> String {
    let cells: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.method.to_string(),
                r.task.clone(),
                format!("{:.0}%", r.success_rate * 100.0),
                format!("{:.2} ± {:.2}", r.spl_mean, r.spl_std),
                format!("{:.1}", r.mean_steps),
                format!("{:.1}", r.mean_replans),
            ]
        })
        .collect();
    let head = ["method", "task", "success", "SPL", "steps", "replans"];
    let mut w: Vec<usize> = head.iter().map(|h| h.chars().count()).collect();
    for c in &cells {
        for (i, x) in c.iter().enumerate() {
            w[i] = w[i].max(x.chars().count());
        }
    }
    let line = |xs: &[&str]| {
        let mut s = String::new();
        for (i, x) in xs.iter().enumerate() {
            let pad = w[i] - x.chars().count();
            if i > 0 {
                s.push_str("  ");
            }
            if i >= 2 {
                s.push_str(&" ".repeat(pad));
                s.push_str(x);
            } else {
                s.push_str(x);
                s.push_str(&" ".repeat(pad));
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(&head);
    out.push_str(&line(&w.iter().map(|&n| "-".repeat(n)).collect::<Vec<_>>().iter().map(String::as_str).collect::<Vec<_>>()));
    for c in &cells {
        out.push_str(&line(&c.iter().map(String::as_str).collect::<Vec<_>>()));
    }
    out
}

/// Threshold failures for `--check`: every row has SPL ≤ success, random
/// stays at or under 10%, and with the ground-truth oracle the agent
/// always succeeds.
pub fn check(report: &BenchReport, oracle: &OracleSpec) -> Vec<String> {
    let mut out = Vec::new();
    for r in &report.rows {
        if r.spl_mean > r.success_rate + 1e-12 {
            out.push(format!("{} {}: SPL {:.4} exceeds success {:.4}", r.method, r.task, r.spl_mean, r.success_rate));
        }
        match r.method {
            Method::Random if r.success_rate > 0.10 => {
                out.push(format!("random {}: success {:.2} above 0.10", r.task, r.success_rate));
            }
            Method::Bklva if *oracle == OracleSpec::GroundTruth && r.success_rate < 1.0 => {
                out.push(format!("bklva {}: success {:.2} below 1.00", r.task, r.success_rate));
            }
            _ => {}
        }
    }
    for e in &report.episodes {
        if let Some(err) = &e.error {
            out.push(format!("{} {} seed {}: {err}", e.method, e.task, e.seed));
        }
    }
    out
}
