//! The observe, update, plan, execute loop.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::belief::{typed_tuples, ActionOutcome, BeliefState, Detection, Observation};
use crate::compile::CompiledDomain;
use crate::logic::TruthValue;
use crate::model::{action_label, ActionKind, Formula, GroundAction, GroundAtom, ObjectRef};
use crate::pddl::{parse_goal, PddlError};
use crate::planner::{plan_with, PlannerConfig};
use crate::sim::{ObservationPayload, StepOutcome};

pub const DEFAULT_BUDGET: usize = 50;

/// Answers predicate queries about what an observation shows. Atoms name
/// objects by handle.
pub trait PerceptionOracle {
    fn answer(&mut self, queried: &[GroundAtom], payload: &ObservationPayload) -> BTreeMap<GroundAtom, TruthValue>;

    fn detect(&mut self, payload: &ObservationPayload) -> Vec<Detection>;
}

/// Something an agent can act in. Actions are labels such as
/// `PickFromTable(robot1,cup1,table1)` over object handles.
pub trait Environment {
    fn reset(&mut self) -> ObservationPayload;

    fn step(&mut self, action: &str) -> (StepOutcome, ObservationPayload);

    /// Whether the true world state satisfies the task goal.
    fn goal_reached(&self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Goal,
    Infeasible,
    StepBudget,
    IllegalTransition,
    Stuck,
    /// The belief satisfies the goal but the world does not.
    FalseGoal,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).expect("unit enum");
        f.write_str(s.as_str().expect("string tag"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub action: Option<String>,
    pub env_action: Option<String>,
    pub outcome: Option<StepOutcome>,
    pub added: Vec<String>,
    pub removed: Vec<String>,
    pub new_objects: Vec<String>,
    pub replan: bool,
    pub answers: BTreeMap<GroundAtom, TruthValue>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeResult {
    pub success: bool,
    pub steps: usize,
    pub replans: usize,
    pub termination: Termination,
    pub trace: Vec<TraceStep>,
    /// Last belief of the agent; `None` for agents without one.
    pub final_belief: Option<BeliefState>,
}

impl EpisodeResult {
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.trace {
            out.push_str(&serde_json::to_string(s).expect("trace serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecConfig {
    pub budget: usize,
    pub planner: PlannerConfig,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            budget: DEFAULT_BUDGET,
            planner: PlannerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    Continue,
    Replan,
}

/// Whether every effect the planner assumed for `a` holds in `b_after`.
pub fn expected_effects(a: &GroundAction, b_after: &BeliefState) -> bool {
    a.add.iter().all(|x| b_after.facts().contains(x)) && a.delete.iter().all(|x| !b_after.facts().contains(x))
}

pub fn replan_triggers(a: &GroundAction, b_after: &BeliefState, new_objects: &[ObjectRef]) -> Trigger {
    if !expected_effects(a, b_after) || !new_objects.is_empty() {
        Trigger::Replan
    } else {
        Trigger::Continue
    }
}

/// Parses a structured goal against the belief's objects.
pub fn translate_goal(text: &str, domain: &CompiledDomain, b: &BeliefState) -> Result<Formula, PddlError> {
    parse_goal(text, &domain.source, &b.objects())
}

/// The environment label of an agent action: observe variants collapse to
/// their base operator and objects are named by handle.
pub fn env_label(a: &GroundAction, b: &BeliefState) -> String {
    let args: Vec<String> = a
        .args
        .iter()
        .map(|x| b.handle_of(x).unwrap_or(x).to_string())
        .collect();
    match &a.kind {
        ActionKind::Observe { base, .. } => action_label(base, &args),
        ActionKind::Physical => action_label(&a.name, &args),
    }
}

struct Perceived {
    belief: BeliefState,
    new_objects: Vec<ObjectRef>,
    answers: BTreeMap<GroundAtom, TruthValue>,
}

/// Detect, query every atom over visible objects in one batch, and revise.
///
/// A known answer that contradicts the predicted belief about an already
/// tracked object is held back until the next perception repeats it;
/// `pending` carries those answers between calls.
fn perceive(
    b: &BeliefState,
    action: Option<&GroundAction>,
    outcome: Option<ActionOutcome>,
    payload: &ObservationPayload,
    oracle: &mut dyn PerceptionOracle,
    pending: &mut BTreeMap<GroundAtom, bool>,
) -> Perceived {
    let detections = oracle.detect(payload);
    let sig = b.signature().clone();
    let visible: Vec<ObjectRef> = detections.iter().map(|d| ObjectRef::new(d.handle.clone(), d.ty.clone())).collect();
    let mut queried = Vec::new();
    for (p, info) in sig.source_predicates() {
        for args in typed_tuples(&info.param_types, &visible, &sig) {
            queried.push(GroundAtom::new(p, args));
        }
    }
    let answers = oracle.answer(&queried, payload);

    let bare = Observation {
        detections: detections.clone(),
        reports: Vec::new(),
        outcome,
    };
    let predicted = b.belief_update(action, &bare).map(|(p, _)| p).unwrap_or_else(|_| b.clone());
    let fresh: BTreeSet<&str> = detections
        .iter()
        .filter(|d| b.object_by_handle(&d.handle).is_none())
        .map(|d| d.handle.as_str())
        .collect();
    let mut held = BTreeMap::new();
    let mut reports = Vec::new();
    for (a, v) in &answers {
        let Some(val) = v.to_bool() else { continue };
        if a.args.iter().any(|h| fresh.contains(h.as_str())) {
            reports.push((a.clone(), *v));
            continue;
        }
        let named = a.rename(|h| predicted.object_by_handle(h).unwrap_or(h).to_string());
        match predicted.value(&named) {
            Ok(cur) if cur.is_known() && cur.to_bool() != Some(val) => {
                if pending.get(a) == Some(&val) {
                    reports.push((a.clone(), *v));
                } else {
                    held.insert(a.clone(), val);
                }
            }
            _ => reports.push((a.clone(), *v)),
        }
    }
    *pending = held;

    let obs = Observation {
        detections,
        reports,
        outcome,
    };
    match b.belief_update(action, &obs) {
        Ok((belief, new_objects)) => Perceived {
            belief,
            new_objects,
            answers,
        },
        // a report that cannot be applied is dropped with the observation
        Err(_) => {
            let (belief, new_objects) = b.associate_objects(&obs.detections);
            Perceived {
                belief,
                new_objects,
                answers,
            }
        }
    }
}

fn delta(before: &BeliefState, after: &BeliefState) -> (Vec<String>, Vec<String>) {
    let added = after.facts().difference(before.facts()).map(ToString::to_string).collect();
    let removed = before.facts().difference(after.facts()).map(ToString::to_string).collect();
    (added, removed)
}

/// Runs one episode from the environment's initial state. `initial` is the
/// agent's prior belief and `goal` is over compiled fluents.
pub fn run_episode(
    env: &mut dyn Environment,
    oracle: &mut dyn PerceptionOracle,
    domain: &CompiledDomain,
    initial: &BeliefState,
    goal: &Formula,
    config: &ExecConfig,
) -> EpisodeResult {
    let mut trace = Vec::new();
    let payload = env.reset();
    let mut pending = BTreeMap::new();
    let p = perceive(initial, None, None, &payload, oracle, &mut pending);
    let (added, removed) = delta(initial, &p.belief);
    trace.push(TraceStep {
        step: 0,
        action: None,
        env_action: None,
        outcome: None,
        added,
        removed,
        new_objects: p.new_objects.iter().map(|o| o.name.clone()).collect(),
        replan: false,
        answers: p.answers,
    });
    let mut b = p.belief;
    let mut steps = 0usize;
    let mut calls = 0usize;
    let mut last: Option<(Vec<String>, BTreeSet<GroundAtom>, Vec<ObjectRef>, BTreeMap<GroundAtom, bool>)> = None;

    let termination = 'episode: loop {
        if b.goal_satisfied(goal) {
            break if env.goal_reached() { Termination::Goal } else { Termination::FalseGoal };
        }
        if steps >= config.budget {
            break Termination::StepBudget;
        }
        let plan = match plan_with(&b, goal, domain, &config.planner) {
            Ok(p) => p,
            Err(_) => break Termination::Infeasible,
        };
        calls += 1;
        // held-back evidence counts as belief change
        let key = (plan.labels(), b.facts().clone(), b.objects(), pending.clone());
        if last.as_ref() == Some(&key) {
            break Termination::Stuck;
        }
        last = Some(key);

        for a in &plan.actions {
            if steps >= config.budget {
                break 'episode Termination::StepBudget;
            }
            if b.eval(&a.precondition) != Ok(TruthValue::True) {
                break;
            }
            let label = env_label(a, &b);
            let (outcome, payload) = env.step(&label);
            steps += 1;
            let result = match outcome {
                StepOutcome::Success => ActionOutcome::Succeeded,
                _ => ActionOutcome::Failed,
            };
            let p = perceive(&b, Some(a), Some(result), &payload, oracle, &mut pending);
            let replan = outcome != StepOutcome::Illegal
                && replan_triggers(a, &p.belief, &p.new_objects) == Trigger::Replan;
            let (added, removed) = delta(&b, &p.belief);
            trace.push(TraceStep {
                step: steps,
                action: Some(a.label()),
                env_action: Some(label),
                outcome: Some(outcome),
                added,
                removed,
                new_objects: p.new_objects.iter().map(|o| o.name.clone()).collect(),
                replan,
                answers: p.answers,
            });
            b = p.belief;
            if outcome == StepOutcome::Illegal {
                break 'episode Termination::IllegalTransition;
            }
            if replan || b.goal_satisfied(goal) {
                break;
            }
        }
    };

    EpisodeResult {
        success: termination == Termination::Goal,
        steps,
        replans: calls.saturating_sub(1),
        termination,
        trace,
        final_belief: Some(b),
    }
}
