//! JSON form of an expanded graph.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::model::GroundAtom;

use super::{ObservationPayload, StepOutcome, TransitionGraph, WorldObject};

pub type NodeDoc = ObservationPayload;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub from: String,
    pub action: String,
    pub outcome: StepOutcome,
    pub to: String,
}

/// `nodes` maps node ids to payloads, `ground_truth` lists the true atoms
/// of each node, `goals` the nodes satisfying the task goal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub task: String,
    pub variant: String,
    pub initial: String,
    pub goals: Vec<String>,
    pub objects: Vec<WorldObject>,
    pub nodes: BTreeMap<String, NodeDoc>,
    pub edges: Vec<EdgeDoc>,
    pub ground_truth: BTreeMap<String, Vec<GroundAtom>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub goals: usize,
    pub optimal_length: usize,
}

impl GraphDoc {
    pub fn from_graph(g: &TransitionGraph) -> GraphDoc {
        let mut nodes = BTreeMap::new();
        let mut truth = BTreeMap::new();
        let mut edges = Vec::new();
        let mut goals = Vec::new();
        for n in 0..g.node_count() {
            let id = g.node_id(n);
            nodes.insert(id.clone(), g.payload(n));
            truth.insert(id.clone(), g.truth(n).into_iter().collect());
            if g.is_goal(n) {
                goals.push(id.clone());
            }
            for (action, outcome, to) in g.outgoing(n) {
                edges.push(EdgeDoc {
                    from: id.clone(),
                    action: action.to_string(),
                    outcome,
                    to: g.node_id(to),
                });
            }
        }
        GraphDoc {
            task: g.model.task.clone(),
            variant: g.variant.clone(),
            initial: g.node_id(g.initial()),
            goals,
            objects: g.model.objects.clone(),
            nodes,
            edges,
            ground_truth: truth,
        }
    }

    /// Structural checks plus goal reachability over success edges. Returns
    /// every problem found.
    pub fn validate(&self) -> Result<GraphSummary, Vec<String>> {
        let mut errs = Vec::new();
        if !self.nodes.contains_key(&self.initial) {
            errs.push(format!("initial node {} is missing", self.initial));
        }
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            for end in [&e.from, &e.to] {
                if !self.nodes.contains_key(end) {
                    errs.push(format!("edge {} --{}--> {}: node {end} is missing", e.from, e.action, e.to));
                }
            }
            if !seen.insert((&e.from, &e.action)) {
                errs.push(format!("duplicate edge for ({}, {})", e.from, e.action));
            }
        }
        for (id, payload) in &self.nodes {
            let Some(truth) = self.ground_truth.get(id) else {
                errs.push(format!("node {id} has no ground truth"));
                continue;
            };
            let truth: BTreeSet<&GroundAtom> = truth.iter().collect();
            for (a, v) in &payload.reports {
                if let Some(b) = v.to_bool() {
                    if b != truth.contains(a) {
                        errs.push(format!("node {id}: report {a} = {v} contradicts ground truth"));
                    }
                }
            }
        }
        for gid in &self.goals {
            if !self.nodes.contains_key(gid) {
                errs.push(format!("goal node {gid} is missing"));
            }
        }

        let mut succ: HashMap<&str, Vec<&str>> = HashMap::new();
        for e in self.edges.iter().filter(|e| e.outcome == StepOutcome::Success) {
            succ.entry(&e.from).or_default().push(&e.to);
        }
        let mut dist: HashMap<&str, usize> = HashMap::from([(self.initial.as_str(), 0)]);
        let mut queue = VecDeque::from([self.initial.as_str()]);
        while let Some(n) = queue.pop_front() {
            let d = dist[n];
            for &t in succ.get(n).into_iter().flatten() {
                if !dist.contains_key(t) {
                    dist.insert(t, d + 1);
                    queue.push_back(t);
                }
            }
        }
        let mut best = None;
        for gid in &self.goals {
            match dist.get(gid.as_str()) {
                Some(&d) => best = Some(best.map_or(d, |b: usize| b.min(d))),
                None => errs.push(format!("goal node {gid} is unreachable")),
            }
        }
        if self.goals.is_empty() {
            errs.push("no goal nodes".to_string());
        }
        match (errs.is_empty(), best) {
            (true, Some(optimal_length)) => Ok(GraphSummary {
                nodes: self.nodes.len(),
                edges: self.edges.len(),
                goals: self.goals.len(),
                optimal_length,
            }),
            _ => Err(errs),
        }
    }
}
