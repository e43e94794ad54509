use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::belief::{typed_tuples, Detection};
use crate::compile::CompiledDomain;
use crate::logic::TruthValue;
use crate::model::{
    action_label, enumerate_groundings, ActionKind, Formula, GroundAtom, ObjectRef, OperatorKind, PredicateInfo,
    PredicateRole, Signature, Valuation,
};
use crate::planner::flatten;

use super::SimError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WorldObject {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepOutcome {
    Success,
    Fail,
    Illegal,
}

/// What a view of the world shows: visible objects, the truth of every
/// atom over them as far as it can be seen, and the gripper contents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationPayload {
    pub image: String,
    pub visible: Vec<Detection>,
    pub holding: Vec<String>,
    pub reports: BTreeMap<GroundAtom, TruthValue>,
}

/// An objects-inside-containers rule: `x` with `(relation x c)` stays out of
/// view while `visible_when` (over `?c` and `?x`) is not true.
#[derive(Debug, Clone)]
pub(crate) struct Concealment {
    pub container_type: String,
    pub relation: String,
    pub visible_when: Formula,
}

#[derive(Debug, Clone)]
pub(crate) struct EnvAction {
    pub label: String,
    pub pre_pos: Vec<usize>,
    pub pre_neg: Vec<usize>,
    /// The subset of the precondition over physical fluents.
    pub phys_pos: Vec<usize>,
    pub phys_neg: Vec<usize>,
    pub add: Vec<usize>,
    pub del: Vec<usize>,
    pub observed: Option<usize>,
    pub illegal: Option<Formula>,
}

/// Interned world vocabulary and action set shared by every node.
#[derive(Debug)]
pub struct WorldModel {
    pub task: String,
    pub signature: Arc<Signature>,
    truth_signature: Signature,
    pub objects: Vec<WorldObject>,
    atoms: Vec<GroundAtom>,
    atom_index: HashMap<GroundAtom, usize>,
    belief_atoms: Vec<GroundAtom>,
    belief_index: HashMap<GroundAtom, usize>,
    /// (K+, K-) atom indices per belief atom.
    belief_k: Vec<(usize, usize)>,
    pub(crate) actions: Vec<EnvAction>,
    action_index: HashMap<String, usize>,
    concealment: Vec<Concealment>,
    goal_pos: Vec<usize>,
    goal_neg: Vec<usize>,
    goal_impossible: bool,
    pub observe_actions: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WorldState {
    view: Vec<u64>,
    hidden: Vec<u64>,
}

fn words(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

fn get(bits: &[u64], i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

fn set(bits: &mut [u64], i: usize, v: bool) {
    if v {
        bits[i / 64] |= 1 << (i % 64);
    } else {
        bits[i / 64] &= !(1 << (i % 64));
    }
}

/// Valuation of one world state, either over compiled fluents (what has been
/// revealed) or over plain truth.
struct StateView<'a> {
    model: &'a WorldModel,
    state: &'a WorldState,
    truth: bool,
}

impl Valuation for StateView<'_> {
    fn signature(&self) -> &Signature {
        if self.truth {
            &self.model.truth_signature
        } else {
            &self.model.signature
        }
    }

    fn object_type(&self, name: &str) -> Option<&str> {
        self.model
            .objects
            .binary_search_by(|o| o.name.as_str().cmp(name))
            .ok()
            .map(|i| self.model.objects[i].ty.as_str())
    }

    fn object_names(&self) -> Vec<&str> {
        self.model.objects.iter().map(|o| o.name.as_str()).collect()
    }

    fn holds(&self, atom: &GroundAtom) -> bool {
        if self.truth {
            if let Some(&b) = self.model.belief_index.get(atom) {
                return self.model.belief_truth(self.state, b);
            }
        }
        self.model
            .atom_index
            .get(atom)
            .is_some_and(|&i| get(&self.state.view, i))
    }
}

/// Inputs for building a world.
pub(crate) struct WorldInit<'a> {
    pub task: &'a str,
    pub domain: &'a CompiledDomain,
    pub objects: Vec<WorldObject>,
    /// True source-level atoms.
    pub truth: BTreeSet<GroundAtom>,
    /// Belief atoms whose value is known from the start.
    pub known: BTreeSet<GroundAtom>,
    pub concealment: Vec<Concealment>,
    /// Operator name → truth-level formula over its parameters.
    pub illegal: BTreeMap<String, Formula>,
    pub goal: &'a Formula,
}

impl WorldModel {
    fn belief_truth(&self, s: &WorldState, b: usize) -> bool {
        get(&s.hidden, b) || get(&s.view, self.belief_k[b].0)
    }

    fn intern(&mut self, a: &GroundAtom) -> usize {
        if let Some(&i) = self.atom_index.get(a) {
            return i;
        }
        self.atoms.push(a.clone());
        self.atom_index.insert(a.clone(), self.atoms.len() - 1);
        self.atoms.len() - 1
    }

    pub(crate) fn build(init: WorldInit<'_>) -> Result<(Arc<WorldModel>, WorldState), SimError> {
        let sig = init.domain.signature.clone();
        let mut truth_signature = (*sig).clone();
        for info in truth_signature.predicates.values_mut() {
            info.role = PredicateRole::Physical;
        }
        let mut objects = init.objects;
        objects.sort();
        let refs: Vec<ObjectRef> = objects.iter().map(|o| ObjectRef::new(o.name.clone(), o.ty.clone())).collect();

        let mut m = WorldModel {
            task: init.task.to_string(),
            signature: sig.clone(),
            truth_signature,
            objects,
            atoms: Vec::new(),
            atom_index: HashMap::new(),
            belief_atoms: Vec::new(),
            belief_index: HashMap::new(),
            belief_k: Vec::new(),
            actions: Vec::new(),
            action_index: HashMap::new(),
            concealment: init.concealment,
            goal_pos: Vec::new(),
            goal_neg: Vec::new(),
            goal_impossible: false,
            observe_actions: init.domain.observe_map.keys().cloned().collect(),
        };

        for (p, info) in sig.source_predicates() {
            if let PredicateRole::Belief { known_true, known_false } = &info.role {
                for args in typed_tuples(&info.param_types, &refs, &sig) {
                    let a = GroundAtom::new(p, args);
                    let kt = m.intern(&a.with_predicate(known_true.as_str()));
                    let kf = m.intern(&a.with_predicate(known_false.as_str()));
                    m.belief_index.insert(a.clone(), m.belief_atoms.len());
                    m.belief_atoms.push(a);
                    m.belief_k.push((kt, kf));
                }
            }
        }
        for a in &init.truth {
            if !sig.is_belief(&a.predicate) {
                m.intern(a);
            }
        }

        let mut grounded = Vec::new();
        for op in &init.domain.classical.operators {
            if matches!(op.kind, OperatorKind::ObserveVariant { positive: false, .. }) {
                continue;
            }
            for a in enumerate_groundings(op, &refs, &sig.types) {
                for x in a.add.iter().chain(&a.delete) {
                    m.intern(x);
                }
                grounded.push(a);
            }
        }

        let blank = WorldState {
            view: vec![0; words(m.atoms.len())],
            hidden: vec![0; words(m.belief_atoms.len())],
        };
        let mut actions = Vec::new();
        'actions: for a in grounded {
            let view = StateView {
                model: &m,
                state: &blank,
                truth: false,
            };
            let pre = flatten(&a.precondition, &view)?;
            let (mut pre_pos, mut pre_neg, mut phys_pos, mut phys_neg) = (vec![], vec![], vec![], vec![]);
            let physical = |x: &GroundAtom| matches!(sig.get(&x.predicate), Some(PredicateInfo { role: PredicateRole::Physical, .. }));
            for x in &pre.pos {
                let Some(&i) = m.atom_index.get(x) else { continue 'actions };
                pre_pos.push(i);
                if physical(x) {
                    phys_pos.push(i);
                }
            }
            for x in &pre.neg {
                if let Some(&i) = m.atom_index.get(x) {
                    pre_neg.push(i);
                    if physical(x) {
                        phys_neg.push(i);
                    }
                }
            }
            let (label, observed) = match &a.kind {
                ActionKind::Observe { base, observed, .. } => {
                    (action_label(base, &a.args), Some(m.belief_index[observed]))
                }
                ActionKind::Physical => (a.label(), None),
            };
            let illegal = init.illegal.get(&a.name).map(|rule| {
                let schema = init.domain.classical.operator(&a.name).expect("grounded from this domain");
                let subst = schema
                    .params
                    .iter()
                    .zip(&a.args)
                    .map(|(p, o)| (p.var.clone(), o.clone()))
                    .collect();
                rule.substitute(&subst)
            });
            actions.push(EnvAction {
                label,
                pre_pos,
                pre_neg,
                phys_pos,
                phys_neg,
                add: if observed.is_some() { vec![] } else { a.add.iter().map(|x| m.atom_index[x]).collect() },
                del: if observed.is_some() { vec![] } else { a.delete.iter().map(|x| m.atom_index[x]).collect() },
                observed,
                illegal,
            });
        }
        actions.sort_by(|x, y| x.label.cmp(&y.label));
        m.action_index = actions.iter().enumerate().map(|(i, a)| (a.label.clone(), i)).collect();
        m.actions = actions;

        let view = StateView {
            model: &m,
            state: &blank,
            truth: false,
        };
        let g = flatten(init.goal, &view)?;
        let mut goal_pos = Vec::new();
        let mut goal_neg = Vec::new();
        let mut impossible = false;
        for x in &g.pos {
            match m.atom_index.get(x) {
                Some(&i) => goal_pos.push(i),
                None => impossible = true,
            }
        }
        for x in &g.neg {
            if let Some(&i) = m.atom_index.get(x) {
                goal_neg.push(i);
            }
        }
        m.goal_pos = goal_pos;
        m.goal_neg = goal_neg;
        m.goal_impossible = impossible;

        let mut s0 = blank;
        for a in &init.truth {
            if let Some(&b) = m.belief_index.get(a) {
                if !init.known.contains(a) {
                    set(&mut s0.hidden, b, true);
                }
            } else if let Some(&i) = m.atom_index.get(a) {
                set(&mut s0.view, i, true);
            }
        }
        for a in &init.known {
            let b = *m
                .belief_index
                .get(a)
                .ok_or_else(|| SimError::Invalid(format!("{a} is not a belief atom of this world")))?;
            let (kt, kf) = m.belief_k[b];
            set(&mut s0.view, if init.truth.contains(a) { kt } else { kf }, true);
        }
        Ok((Arc::new(m), s0))
    }

    fn holds_all(&self, s: &WorldState, pos: &[usize], neg: &[usize]) -> bool {
        pos.iter().all(|&i| get(&s.view, i)) && neg.iter().all(|&i| !get(&s.view, i))
    }

    fn is_goal(&self, s: &WorldState) -> bool {
        !self.goal_impossible && self.holds_all(s, &self.goal_pos, &self.goal_neg)
    }

    /// Outcome and successor of one action; `None` when no edge exists.
    fn transition(&self, s: &WorldState, a: &EnvAction) -> Option<(StepOutcome, WorldState)> {
        if !self.holds_all(s, &a.phys_pos, &a.phys_neg) {
            return None;
        }
        if let Some(rule) = &a.illegal {
            let tv = StateView {
                model: self,
                state: s,
                truth: true,
            };
            if matches!(crate::model::eval_formula(rule, &tv), Ok(TruthValue::True)) {
                return Some((StepOutcome::Illegal, s.clone()));
            }
        }
        if !self.holds_all(s, &a.pre_pos, &a.pre_neg) {
            return None;
        }
        let mut t = s.clone();
        if let Some(b) = a.observed {
            let (kt, kf) = self.belief_k[b];
            let v = get(&t.hidden, b);
            set(&mut t.hidden, b, false);
            set(&mut t.view, if v { kt } else { kf }, true);
            return Some((StepOutcome::Success, t));
        }
        for &i in &a.del {
            set(&mut t.view, i, false);
        }
        for &i in &a.add {
            set(&mut t.view, i, true);
        }
        // a physical effect on a belief atom makes its value known
        for (b, &(kt, kf)) in self.belief_k.iter().enumerate() {
            if get(&t.hidden, b) && (get(&t.view, kt) || get(&t.view, kf)) {
                set(&mut t.hidden, b, false);
            }
        }
        Some((StepOutcome::Success, t))
    }

    /// True source-level atoms of a state.
    pub fn truth(&self, s: &WorldState) -> BTreeSet<GroundAtom> {
        let mut out = BTreeSet::new();
        for (i, a) in self.atoms.iter().enumerate() {
            if get(&s.view, i) && matches!(self.signature.get(&a.predicate).map(|x| &x.role), Some(PredicateRole::Physical)) {
                out.insert(a.clone());
            }
        }
        for (b, a) in self.belief_atoms.iter().enumerate() {
            if self.belief_truth(s, b) {
                out.insert(a.clone());
            }
        }
        out
    }

    fn visible(&self, s: &WorldState) -> Vec<&WorldObject> {
        let view = StateView {
            model: self,
            state: s,
            truth: false,
        };
        let truth = StateView {
            model: self,
            state: s,
            truth: true,
        };
        self.objects
            .iter()
            .filter(|x| {
                !self.concealment.iter().any(|r| {
                    self.objects.iter().any(|c| {
                        self.signature.types.is_subtype(&c.ty, &r.container_type)
                            && truth.holds(&GroundAtom::new(r.relation.clone(), [x.name.as_str(), c.name.as_str()]))
                            && {
                                let subst = BTreeMap::from([
                                    ("c".to_string(), c.name.clone()),
                                    ("x".to_string(), x.name.clone()),
                                ]);
                                let f = r.visible_when.substitute(&subst);
                                !matches!(crate::model::eval_formula(&f, &view), Ok(TruthValue::True))
                            }
                    })
                })
            })
            .collect()
    }

    pub fn payload(&self, s: &WorldState, image: String) -> ObservationPayload {
        let visible = self.visible(s);
        let truth = self.truth(s);
        let refs: Vec<ObjectRef> = visible.iter().map(|o| ObjectRef::new(o.name.clone(), o.ty.clone())).collect();
        let mut reports = BTreeMap::new();
        for (p, info) in self.signature.source_predicates() {
            for args in typed_tuples(&info.param_types, &refs, &self.signature) {
                let a = GroundAtom::new(p, args);
                let v = match &info.role {
                    PredicateRole::Belief { .. } => {
                        let b = self.belief_index[&a];
                        let (kt, kf) = self.belief_k[b];
                        if get(&s.view, kt) {
                            TruthValue::True
                        } else if get(&s.view, kf) {
                            TruthValue::False
                        } else {
                            TruthValue::Unknown
                        }
                    }
                    _ => TruthValue::from(truth.contains(&a)),
                };
                reports.insert(a, v);
            }
        }
        let location = |name: &str| {
            truth
                .iter()
                .find(|a| a.args.len() == 2 && a.args[0] == name && !self.signature.is_belief(&a.predicate))
                .map(|a| a.args[1].clone())
        };
        let detections = visible
            .iter()
            .map(|o| Detection {
                handle: o.name.clone(),
                label: o.label.clone(),
                ty: o.ty.clone(),
                meta: location(&o.name).map(|l| ("location".to_string(), l)).into_iter().collect(),
            })
            .collect();
        let holding = truth
            .iter()
            .filter(|a| a.predicate == "Holding")
            .filter_map(|a| a.args.last().cloned())
            .collect();
        ObservationPayload {
            image,
            visible: detections,
            holding,
            reports,
        }
    }
}

/// The explicit environment graph: every state reachable from the initial
/// one, labelled success and illegal edges, goal flags and BFS distances.
#[derive(Debug)]
pub struct TransitionGraph {
    pub model: Arc<WorldModel>,
    pub variant: String,
    states: Vec<WorldState>,
    edges: Vec<Vec<(u32, StepOutcome, u32)>>,
    goal: Vec<bool>,
    dist: Vec<u32>,
}

impl TransitionGraph {
    pub(crate) fn expand(model: Arc<WorldModel>, s0: WorldState, variant: &str, cap: usize) -> Result<Self, SimError> {
        let mut states = vec![s0.clone()];
        let mut index: HashMap<WorldState, u32> = HashMap::from([(s0, 0)]);
        let mut edges: Vec<Vec<(u32, StepOutcome, u32)>> = vec![Vec::new()];
        let mut dist = vec![0u32];
        let mut queue = VecDeque::from([0u32]);
        while let Some(n) = queue.pop_front() {
            let s = states[n as usize].clone();
            let mut out = Vec::new();
            for (ai, a) in model.actions.iter().enumerate() {
                let Some((outcome, t)) = model.transition(&s, a) else { continue };
                let target = if outcome == StepOutcome::Illegal {
                    n
                } else if let Some(&id) = index.get(&t) {
                    id
                } else {
                    if states.len() >= cap {
                        return Err(SimError::GraphTooLarge { cap });
                    }
                    let id = states.len() as u32;
                    index.insert(t.clone(), id);
                    states.push(t);
                    edges.push(Vec::new());
                    dist.push(dist[n as usize] + 1);
                    queue.push_back(id);
                    id
                };
                out.push((ai as u32, outcome, target));
            }
            edges[n as usize] = out;
        }
        let goal = states.iter().map(|s| model.is_goal(s)).collect();
        Ok(TransitionGraph {
            model,
            variant: variant.to_string(),
            states,
            edges,
            goal,
            dist,
        })
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn node_count(&self) -> usize {
        self.states.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn node_id(&self, n: usize) -> String {
        format!("s{n}")
    }

    pub fn is_goal(&self, n: usize) -> bool {
        self.goal[n]
    }

    pub fn distance(&self, n: usize) -> usize {
        self.dist[n] as usize
    }

    /// Length of the shortest success path from the initial node to a goal.
    pub fn optimal_length(&self) -> Option<usize> {
        (0..self.states.len()).filter(|&n| self.goal[n]).map(|n| self.distance(n)).min()
    }

    /// Follows the edge for `label`; a missing edge is a failure in place.
    pub fn step(&self, n: usize, label: &str) -> (StepOutcome, usize) {
        let Some(&ai) = self.model.action_index.get(label) else {
            return (StepOutcome::Fail, n);
        };
        let es = &self.edges[n];
        match es.binary_search_by_key(&(ai as u32), |e| e.0) {
            Ok(k) => (es[k].1, es[k].2 as usize),
            Err(_) => (StepOutcome::Fail, n),
        }
    }

    /// Outgoing edges in label order.
    pub fn outgoing(&self, n: usize) -> Vec<(&str, StepOutcome, usize)> {
        self.edges[n]
            .iter()
            .map(|&(a, o, t)| (self.model.actions[a as usize].label.as_str(), o, t as usize))
            .collect()
    }

    pub fn payload(&self, n: usize) -> ObservationPayload {
        self.model
            .payload(&self.states[n], format!("{}/{}/{}.png", self.model.task, self.variant, self.node_id(n)))
    }

    pub fn truth(&self, n: usize) -> BTreeSet<GroundAtom> {
        self.model.truth(&self.states[n])
    }
}
