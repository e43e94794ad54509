//! Partially observable transition-graph environment. Tasks are authored as
//! a belief domain, a problem, and a world file with hidden facts and
//! visibility and legality rules; the explicit graph is expanded at load.

mod doc;
mod graph;
pub mod oracles;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefError, BeliefState};
use crate::compile::{compile, CompileError, CompiledDomain};
use crate::logic::TruthValue;
use crate::model::{Formula, ModelError, ObjectRef, Param, Problem};
use crate::pddl::{parse_domain, parse_formula, parse_ground_atom, parse_problem, PddlError};

pub use doc::{GraphDoc, GraphSummary, NodeDoc, EdgeDoc};
pub use graph::{ObservationPayload, StepOutcome, TransitionGraph, WorldModel, WorldObject, WorldState};

pub const TASK_NAMES: [&str; 3] = ["cup-pick-place", "drawer-cleaning", "sort-weight"];
pub const DEFAULT_NODE_CAP: usize = 200_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("invalid probabilities: p_flip={p_flip}, p_abstain={p_abstain}")]
    InvalidProbability { p_flip: f64, p_abstain: f64 },
    #[error(transparent)]
    Pddl(#[from] PddlError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error("world file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("graph exceeds {cap} nodes")]
    GraphTooLarge { cap: usize },
    #[error("report contradicts ground truth: {0}")]
    Unsound(String),
    #[error("no goal node reachable in variant `{0}`")]
    Unreachable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub name: String,
    #[serde(default)]
    pub objects: Vec<WorldObject>,
    /// Extra true atoms; belief atoms listed here start hidden.
    #[serde(default)]
    pub facts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcealmentSpec {
    pub container_type: String,
    pub relation: String,
    pub visible_when: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IllegalSpec {
    pub action: String,
    pub when: String,
}

fn default_cap() -> usize {
    DEFAULT_NODE_CAP
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub task: String,
    pub variants: Vec<VariantSpec>,
    #[serde(default)]
    pub concealment: Vec<ConcealmentSpec>,
    #[serde(default)]
    pub illegal: Vec<IllegalSpec>,
    #[serde(default = "default_cap")]
    pub node_cap: usize,
}

/// Labels drop the instance number: `cup12` → `cup`.
pub fn label_of(name: &str) -> String {
    name.trim_end_matches(|c: char| c.is_ascii_digit()).to_string()
}

#[derive(Debug)]
pub struct Task {
    pub name: String,
    pub domain_text: String,
    pub problem_text: String,
    pub domain: CompiledDomain,
    pub problem: Problem,
    /// Goal over compiled fluents.
    pub goal: Formula,
    pub world: WorldSpec,
}

impl Task {
    pub fn from_sources(name: &str, domain_text: &str, problem_text: &str, world_json: &str) -> Result<Task, SimError> {
        let source = parse_domain(domain_text)?;
        let domain = compile(&source)?;
        let problem = parse_problem(problem_text, &source)?;
        let goal = domain.lower_goal(&problem.goal)?;
        let world: WorldSpec = serde_json::from_str(world_json)?;
        if world.variants.is_empty() {
            return Err(SimError::Invalid(format!("{name}: no variants")));
        }
        Ok(Task {
            name: name.to_string(),
            domain_text: domain_text.to_string(),
            problem_text: problem_text.to_string(),
            domain,
            problem,
            goal,
            world,
        })
    }

    pub fn variant_count(&self) -> usize {
        self.world.variants.len()
    }

    /// Variant drawn for an episode seed.
    pub fn variant_for_seed(&self, seed: u64) -> usize {
        ChaCha8Rng::seed_from_u64(seed).gen_range(0..self.variant_count())
    }

    /// The agent's starting belief: the problem's objects and initial facts.
    pub fn initial_belief(&self) -> Result<BeliefState, SimError> {
        Ok(BeliefState::from_problem(&self.domain, &self.problem)?)
    }

    /// Expands one variant and checks observational soundness and goal
    /// reachability.
    pub fn build_graph(&self, variant: usize) -> Result<TransitionGraph, SimError> {
        let g = self.expand(variant)?;
        if g.optimal_length().is_none() {
            return Err(SimError::Unreachable(g.variant.clone()));
        }
        Ok(g)
    }

    /// Like [`Task::build_graph`] but accepts variants whose goal cannot be
    /// reached.
    pub fn expand(&self, variant: usize) -> Result<TransitionGraph, SimError> {
        let v = self
            .world
            .variants
            .get(variant)
            .ok_or_else(|| SimError::Invalid(format!("{}: no variant {variant}", self.name)))?;
        let source = &self.domain.source;
        let mut objects: Vec<WorldObject> = self
            .problem
            .objects
            .iter()
            .map(|o| WorldObject {
                name: o.name.clone(),
                ty: o.ty.clone(),
                label: label_of(&o.name),
            })
            .collect();
        objects.extend(v.objects.iter().cloned());
        let refs: Vec<ObjectRef> = objects.iter().map(|o| ObjectRef::new(o.name.clone(), o.ty.clone())).collect();

        let mut truth = BTreeSet::new();
        let mut known = BTreeSet::new();
        for (a, tv) in &self.problem.init {
            let belief = self.domain.signature.is_belief(&a.predicate);
            match tv {
                TruthValue::True => {
                    truth.insert(a.clone());
                    if belief {
                        known.insert(a.clone());
                    }
                }
                TruthValue::False if belief => {
                    known.insert(a.clone());
                }
                _ => {}
            }
        }
        for f in &v.facts {
            truth.insert(parse_ground_atom(f, source, &refs)?);
        }

        let mut concealment = Vec::new();
        for c in &self.world.concealment {
            let params = [Param::new("c", c.container_type.clone()), Param::new("x", "object")];
            concealment.push(graph::Concealment {
                container_type: c.container_type.clone(),
                relation: c.relation.clone(),
                visible_when: parse_formula(&c.visible_when, source, &refs, &params)?,
            });
        }
        let mut illegal = BTreeMap::new();
        for r in &self.world.illegal {
            let op = source
                .operator(&r.action)
                .ok_or_else(|| SimError::Invalid(format!("illegal rule for unknown action {}", r.action)))?;
            illegal.insert(r.action.clone(), parse_formula(&r.when, source, &refs, &op.params)?);
        }

        let (model, s0) = WorldModel::build(graph::WorldInit {
            task: &self.name,
            domain: &self.domain,
            objects,
            truth,
            known,
            concealment,
            illegal,
            goal: &self.goal,
        })?;
        let g = TransitionGraph::expand(model, s0, &v.name, self.world.node_cap)?;
        check_sound(&g)?;
        Ok(g)
    }
}

/// Every known report in every node agrees with the node's ground truth.
pub fn check_sound(g: &TransitionGraph) -> Result<(), SimError> {
    for n in 0..g.node_count() {
        let truth = g.truth(n);
        for (a, tv) in g.payload(n).reports {
            if let Some(v) = tv.to_bool() {
                if v != truth.contains(&a) {
                    return Err(SimError::Unsound(format!("{a} at {}", g.node_id(n))));
                }
            }
        }
    }
    Ok(())
}

macro_rules! shipped {
    ($dir:literal) => {
        (
            include_str!(concat!("../../tasks/", $dir, "/domain.bpddl")),
            include_str!(concat!("../../tasks/", $dir, "/problem.bpddl")),
            include_str!(concat!("../../tasks/", $dir, "/world.json")),
        )
    };
}

fn sources(name: &str) -> Option<(&'static str, &'static str, &'static str)> {
    Some(match name {
        "cup-pick-place" => shipped!("cup-pick-place"),
        "drawer-cleaning" => shipped!("drawer-cleaning"),
        "sort-weight" => shipped!("sort-weight"),
        _ => return None,
    })
}

type Cache<K, V> = OnceLock<Mutex<HashMap<K, Arc<V>>>>;

static TASKS: Cache<String, Task> = OnceLock::new();
static GRAPHS: Cache<(String, usize), TransitionGraph> = OnceLock::new();

/// A shipped task, parsed once per process.
pub fn task(name: &str) -> Result<Arc<Task>, SimError> {
    let cache = TASKS.get_or_init(Default::default);
    if let Some(t) = cache.lock().expect("task cache").get(name) {
        return Ok(t.clone());
    }
    let (d, p, w) = sources(name).ok_or_else(|| SimError::UnknownTask(name.to_string()))?;
    let t = Arc::new(Task::from_sources(name, d, p, w)?);
    cache.lock().expect("task cache").insert(name.to_string(), t.clone());
    Ok(t)
}

/// The expanded graph of a shipped task variant, built once per process.
pub fn graph(name: &str, variant: usize) -> Result<Arc<TransitionGraph>, SimError> {
    let cache = GRAPHS.get_or_init(Default::default);
    let key = (name.to_string(), variant);
    if let Some(g) = cache.lock().expect("graph cache").get(&key) {
        return Ok(g.clone());
    }
    let g = Arc::new(task(name)?.build_graph(variant)?);
    cache.lock().expect("graph cache").insert(key, g.clone());
    Ok(g)
}

#[derive(Debug, Clone)]
pub struct LoadedTask {
    pub task: Arc<Task>,
    pub variant: usize,
    pub graph: Arc<TransitionGraph>,
}

impl LoadedTask {
    pub fn optimal_length(&self) -> usize {
        self.graph.optimal_length().expect("checked at load")
    }

    pub fn env(&self) -> GraphEnv {
        GraphEnv::new(self.graph.clone())
    }
}

/// Loads a task read from files; the graph is built on each call.
pub fn load_custom(task: Arc<Task>, seed: u64) -> Result<LoadedTask, SimError> {
    let variant = task.variant_for_seed(seed);
    Ok(LoadedTask {
        graph: Arc::new(task.build_graph(variant)?),
        task,
        variant,
    })
}

/// Loads a shipped task with the variant chosen by `seed`.
pub fn load_task(name: &str, seed: u64) -> Result<LoadedTask, SimError> {
    let t = task(name)?;
    let variant = t.variant_for_seed(seed);
    Ok(LoadedTask {
        graph: graph(name, variant)?,
        task: t,
        variant,
    })
}

/// Episode cursor over an immutable graph.
#[derive(Debug, Clone)]
pub struct GraphEnv {
    graph: Arc<TransitionGraph>,
    node: usize,
}

impl GraphEnv {
    pub fn new(graph: Arc<TransitionGraph>) -> Self {
        let node = graph.initial();
        GraphEnv { graph, node }
    }

    pub fn graph(&self) -> &TransitionGraph {
        &self.graph
    }

    pub fn node(&self) -> usize {
        self.node
    }
}

impl crate::executive::Environment for GraphEnv {
    fn reset(&mut self) -> ObservationPayload {
        self.node = self.graph.initial();
        self.graph.payload(self.node)
    }

    fn step(&mut self, action: &str) -> (StepOutcome, ObservationPayload) {
        let (o, n) = self.graph.step(self.node, action);
        self.node = n;
        (o, self.graph.payload(n))
    }

    fn goal_reached(&self) -> bool {
        self.graph.is_goal(self.node)
    }
}
