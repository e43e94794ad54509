//! Forward state-space planner over the determinized domain.

pub mod external;
mod grounding;
mod heuristic;
mod search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefError, BeliefState};
use crate::compile::CompiledDomain;
use crate::model::{ActionKind, Formula, GroundAction, ModelError};

pub use grounding::{flatten, ground_problem, Conjunction, GroundProblem, IndexedAction};

pub const DEFAULT_GROUNDING_CAP: usize = 1_000_000;
pub const DEFAULT_BFS_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("goal is unreachable")]
    Infeasible,
    #[error("{count} candidate ground actions exceed the cap of {cap}")]
    GroundingExplosion { count: usize, cap: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("search returned an invalid plan: {0}")]
    Unsound(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Breadth-first while the explored space stays under the BFS cap,
    /// greedy best-first on h_add beyond it.
    #[default]
    Auto,
    Bfs,
    Gbfs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannerConfig {
    pub mode: SearchMode,
    pub grounding_cap: usize,
    pub bfs_cap: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            mode: SearchMode::Auto,
            grounding_cap: DEFAULT_GROUNDING_CAP,
            bfs_cap: DEFAULT_BFS_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub actions: Vec<GroundAction>,
    /// Belief expected after executing every action.
    pub expected: BeliefState,
}

impl Plan {
    pub fn labels(&self) -> Vec<String> {
        self.actions.iter().map(GroundAction::label).collect()
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validation {
    pub valid: bool,
    /// Index of the first inapplicable action, or the plan length when only
    /// the goal check fails.
    pub first_violation: Option<usize>,
    pub final_belief: Option<BeliefState>,
}

/// Simulates `actions` from `b` and checks the goal at the end.
pub fn validate(actions: &[GroundAction], b: &BeliefState, goal: &Formula) -> Validation {
    let mut cur = b.clone();
    for (i, a) in actions.iter().enumerate() {
        match cur.apply_action_effects(a) {
            Ok(next) => cur = next,
            Err(_) => {
                return Validation {
                    valid: false,
                    first_violation: Some(i),
                    final_belief: None,
                }
            }
        }
    }
    let ok = cur.goal_satisfied(goal);
    Validation {
        valid: ok,
        first_violation: if ok { None } else { Some(actions.len()) },
        final_belief: Some(cur),
    }
}

/// Plans with the default configuration.
pub fn plan(b: &BeliefState, goal: &Formula, domain: &CompiledDomain) -> Result<Plan, PlanError> {
    plan_with(b, goal, domain, &PlannerConfig::default())
}

pub fn plan_with(
    b: &BeliefState,
    goal: &Formula,
    domain: &CompiledDomain,
    config: &PlannerConfig,
) -> Result<Plan, PlanError> {
    if b.goal_satisfied(goal) {
        return Ok(Plan {
            actions: Vec::new(),
            expected: b.clone(),
        });
    }
    let gp = ground_problem(b, goal, domain, config.grounding_cap)?;
    if gp.goal_impossible {
        return Err(PlanError::Infeasible);
    }
    let outcome = match config.mode {
        SearchMode::Bfs => search::bfs(&gp, None),
        SearchMode::Gbfs => search::gbfs(&gp),
        SearchMode::Auto => match search::bfs(&gp, Some(config.bfs_cap)) {
            search::Outcome::Capped => search::gbfs(&gp),
            other => other,
        },
    };
    let idx = match outcome {
        search::Outcome::Found(p) => p,
        search::Outcome::Exhausted | search::Outcome::Capped => return Err(PlanError::Infeasible),
    };
    let actions: Vec<GroundAction> = idx.into_iter().map(|i| gp.actions[i].clone()).collect();

    let v = validate(&actions, b, goal);
    let expected = match (v.valid, v.final_belief) {
        (true, Some(e)) => e,
        _ => return Err(PlanError::Unsound(format!("violation at {:?}", v.first_violation))),
    };
    check_observe_gating(&actions, b).map_err(|e| PlanError::Unsound(e.to_string()))?;
    Ok(Plan { actions, expected })
}

/// An observe variant may only appear while its atom is still unknown.
pub fn check_observe_gating(actions: &[GroundAction], b: &BeliefState) -> Result<(), BeliefError> {
    let mut cur = b.clone();
    for a in actions {
        if let ActionKind::Observe { observed, .. } = &a.kind {
            if cur.is_known(observed) {
                return Err(BeliefError::PreconditionViolated {
                    action: a.label(),
                    value: cur.value(observed)?,
                });
            }
        }
        cur = cur.apply_action_effects(a)?;
    }
    Ok(())
}
