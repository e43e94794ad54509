//! Adapter for an external classical planner. The compiled domain and the
//! current belief are written as PDDL, the command is run, and its plan
//! file is read back.

use std::path::{Path, PathBuf};
use std::process::Command;

use crate::belief::BeliefState;
use crate::compile::CompiledDomain;
use crate::logic::TruthValue;
use crate::model::{Formula, GroundAction, Problem};
use crate::pddl::{write_domain, write_problem};

use super::{ground_problem, PlanError, DEFAULT_GROUNDING_CAP};

/// Environment variable naming the planner command. It is invoked as
/// `<cmd> <domain.pddl> <problem.pddl>` inside a scratch directory and must
/// leave its plan in `sas_plan`.
pub const PLANNER_ENV: &str = "BELIEFPLAN_EXTERNAL_PLANNER";

#[derive(Debug, thiserror::Error)]
pub enum ExternalError {
    #[error("no external planner configured (set {PLANNER_ENV})")]
    NotConfigured,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("planner exited with {0}")]
    Failed(String),
    #[error("plan step `{0}` matches no ground action")]
    UnknownStep(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Writes the belief as a classical problem over compiled fluents.
pub fn belief_problem(b: &BeliefState, goal: &Formula, domain: &CompiledDomain) -> Problem {
    Problem {
        name: format!("{}-belief", domain.classical.name),
        domain: domain.classical.name.clone(),
        objects: b.objects(),
        init: b.facts().iter().map(|f| (f.clone(), TruthValue::True)).collect(),
        goal: goal.clone(),
    }
}

/// Reads `(name arg ...)` lines; `;` lines are comments. Names are
/// lowercased since planners commonly normalize case.
pub fn parse_sas_plan(text: &str) -> Vec<(String, Vec<String>)> {
    text.lines()
        .map(str::trim)
        .filter(|l| l.starts_with('('))
        .filter_map(|l| {
            let inner = l.trim_start_matches('(').trim_end_matches(')');
            let mut parts = inner.split_whitespace().map(str::to_lowercase);
            let name = parts.next()?;
            Some((name, parts.collect()))
        })
        .collect()
}

fn locate_command() -> Option<PathBuf> {
    std::env::var_os(PLANNER_ENV).map(PathBuf::from)
}

/// Runs the external planner and maps its steps back to ground actions.
pub fn plan_external(
    b: &BeliefState,
    goal: &Formula,
    domain: &CompiledDomain,
    workdir: &Path,
) -> Result<Vec<GroundAction>, ExternalError> {
    let cmd = locate_command().ok_or(ExternalError::NotConfigured)?;
    std::fs::create_dir_all(workdir)?;
    let dom = workdir.join("domain.pddl");
    let prob = workdir.join("problem.pddl");
    std::fs::write(&dom, write_domain(&domain.classical))?;
    std::fs::write(&prob, write_problem(&belief_problem(b, goal, domain)))?;
    let status = Command::new(&cmd).arg(&dom).arg(&prob).current_dir(workdir).status()?;
    if !status.success() {
        return Err(ExternalError::Failed(status.to_string()));
    }
    let text = std::fs::read_to_string(workdir.join("sas_plan"))?;

    let gp = ground_problem(b, goal, domain, DEFAULT_GROUNDING_CAP)?;
    let mut out = Vec::new();
    for (name, args) in parse_sas_plan(&text) {
        let hit = gp.actions.iter().find(|a| {
            a.name.to_lowercase() == name && a.args.iter().map(|x| x.to_lowercase()).eq(args.iter().cloned())
        });
        match hit {
            Some(a) => out.push(a.clone()),
            None => return Err(ExternalError::UnknownStep(format!("({name} {})", args.join(" ")))),
        }
    }
    Ok(out)
}
