//! Test oracles kept apart from the library's planner and search code.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use beliefplan::belief::BeliefState;
use beliefplan::compile::CompiledDomain;
use beliefplan::executive::{run_episode, EpisodeResult, ExecConfig};
use beliefplan::model::{enumerate_groundings, Formula, GroundAction, GroundAtom, PredicateRole};
use beliefplan::planner::{PlannerConfig, SearchMode};
use beliefplan::sim::oracles::GroundTruthOracle;
use beliefplan::sim::{GraphEnv, Task, TransitionGraph};

pub fn bfs_config() -> PlannerConfig {
    PlannerConfig {
        mode: SearchMode::Bfs,
        ..PlannerConfig::default()
    }
}

/// Shortest plan length by plain breadth-first search over beliefs, trying
/// every grounding of every compiled operator. `None` when the goal is
/// unreachable or more than `cap` beliefs were seen.
pub fn brute_force_len(b: &BeliefState, goal: &Formula, domain: &CompiledDomain, cap: usize) -> Option<usize> {
    let objects = b.objects();
    let actions: Vec<GroundAction> = domain
        .classical
        .operators
        .iter()
        .flat_map(|op| enumerate_groundings(op, &objects, &domain.signature.types))
        .collect();
    let mut seen: HashSet<BTreeSet<GroundAtom>> = HashSet::from([b.facts().clone()]);
    let mut queue = VecDeque::from([(b.clone(), 0usize)]);
    while let Some((cur, d)) = queue.pop_front() {
        if cur.goal_satisfied(goal) {
            return Some(d);
        }
        for a in &actions {
            if let Ok(next) = cur.apply_action_effects(a) {
                if seen.insert(next.facts().clone()) {
                    if seen.len() > cap {
                        return None;
                    }
                    queue.push_back((next, d + 1));
                }
            }
        }
    }
    None
}

/// Length of the shortest success-edge path from the initial node to a goal node.
pub fn graph_bfs(g: &TransitionGraph) -> Option<usize> {
    let mut dist = vec![usize::MAX; g.node_count()];
    dist[g.initial()] = 0;
    let mut queue = VecDeque::from([g.initial()]);
    while let Some(n) = queue.pop_front() {
        if g.is_goal(n) {
            return Some(dist[n]);
        }
        for (_, o, to) in g.outgoing(n) {
            if o == beliefplan::sim::StepOutcome::Success && dist[to] == usize::MAX {
                dist[to] = dist[n] + 1;
                queue.push_back(to);
            }
        }
    }
    None
}

/// All belief atoms over the belief's objects, with their K fluent names.
pub fn k_pairs(b: &BeliefState) -> Vec<(GroundAtom, GroundAtom)> {
    let sig = b.signature();
    let objects = b.objects();
    let mut out = Vec::new();
    for (p, info) in sig.source_predicates() {
        let PredicateRole::Belief { known_true, known_false } = &info.role else { continue };
        for args in beliefplan::belief::typed_tuples(&info.param_types, &objects, sig) {
            let a = GroundAtom::new(p, args);
            out.push((a.with_predicate(known_true.as_str()), a.with_predicate(known_false.as_str())));
        }
    }
    out
}

// Random small belief problems.
//
// Boxes carry up to two hidden attributes. Inspecting reveals one, drain
// and fill flip a known one, and finishing a box may require a value.

pub const PRED_NAMES: [&str; 2] = ["Full", "Hot"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    True,
    False,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct PredRules {
    pub drain: bool,
    pub fill: bool,
    /// Value the attribute must have before `Finish`.
    pub finish: Option<bool>,
    /// Inspecting needs the lid open.
    pub lid: bool,
}

#[derive(Debug, Clone)]
pub struct RandomProblem {
    pub seed: u64,
    pub boxes: usize,
    pub crates: usize,
    pub rules: Vec<PredRules>,
    pub open: bool,
    /// `init[p][b]`
    pub init: Vec<Vec<Init>>,
    pub goal_done: Vec<usize>,
    pub goal_lits: Vec<(usize, usize, bool)>,
}

pub const MAX_BELIEF_STATES: usize = 1000;

impl RandomProblem {
    pub fn generate(seed: u64) -> RandomProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let p = Self::draw(seed, &mut rng);
            if p.objects() <= 5 && p.belief_states() <= MAX_BELIEF_STATES {
                return p;
            }
        }
    }

    fn draw(seed: u64, rng: &mut ChaCha8Rng) -> RandomProblem {
        let boxes = rng.gen_range(1..=3);
        let crates = rng.gen_range(0..=4 - boxes);
        let npred = rng.gen_range(1..=2);
        let rules = (0..npred)
            .map(|_| PredRules {
                drain: rng.gen_bool(0.5),
                fill: rng.gen_bool(0.3),
                finish: match rng.gen_range(0..10) {
                    0..=2 => Some(true),
                    3..=6 => Some(false),
                    _ => None,
                },
                lid: rng.gen_bool(0.5),
            })
            .collect();
        let init = (0..npred)
            .map(|_| {
                (0..boxes)
                    .map(|_| match rng.gen_range(0..4) {
                        0 => Init::True,
                        1 => Init::False,
                        _ => Init::Unknown,
                    })
                    .collect()
            })
            .collect();
        let mut goal_done: Vec<usize> = (0..boxes).filter(|_| rng.gen_bool(0.7)).collect();
        let mut goal_lits = Vec::new();
        for p in 0..npred {
            for b in 0..boxes {
                if rng.gen_bool(0.15) {
                    goal_lits.push((p, b, rng.gen_bool(0.5)));
                }
            }
        }
        if goal_done.is_empty() && goal_lits.is_empty() {
            goal_done.push(0);
        }
        RandomProblem {
            seed,
            boxes,
            crates,
            rules,
            open: rng.gen_bool(0.5),
            init,
            goal_done,
            goal_lits,
        }
    }

    pub fn objects(&self) -> usize {
        1 + self.boxes + self.crates
    }

    fn box_name(b: usize) -> String {
        format!("b{}", b + 1)
    }

    pub fn domain_text(&self) -> String {
        let n = self.rules.len();
        let mut s = String::from(
            "(define (domain rnd)\n  (:requirements :strips :typing :negative-preconditions)\n  \
             (:types Robot Box Crate - object)\n  (:predicates (Open ?r - Robot) (Done ?b - Box))\n  (:belief-predicates",
        );
        for p in &PRED_NAMES[..n] {
            s += &format!(" ({p} ?b - Box)");
        }
        s += ")\n";
        s += "  (:action OpenLid :parameters (?r - Robot) :precondition (not (Open ?r)) :effect (Open ?r))\n";
        s += "  (:action CloseLid :parameters (?r - Robot) :precondition (Open ?r) :effect (not (Open ?r)))\n";
        let mut finish = vec!["(not (Done ?b))".to_string()];
        for (p, r) in PRED_NAMES[..n].iter().zip(&self.rules) {
            let lid = if r.lid { "(Open ?r) " } else { "" };
            s += &format!(
                "  (:action Inspect{p} :parameters (?r - Robot ?b - Box) \
                 :precondition (and {lid}(unknown ({p} ?b))) :observe ({p} ?b))\n"
            );
            if r.drain {
                s += &format!(
                    "  (:action Drain{p} :parameters (?b - Box) :precondition ({p} ?b) :effect (not ({p} ?b)))\n"
                );
            }
            if r.fill {
                s += &format!(
                    "  (:action Fill{p} :parameters (?b - Box) :precondition (not ({p} ?b)) :effect ({p} ?b))\n"
                );
            }
            match r.finish {
                Some(true) => finish.push(format!("({p} ?b)")),
                Some(false) => finish.push(format!("(not ({p} ?b))")),
                None => {}
            }
        }
        s += &format!(
            "  (:action Finish :parameters (?b - Box) :precondition (and {}) :effect (Done ?b)))\n",
            finish.join(" ")
        );
        s
    }

    pub fn problem_text(&self) -> String {
        let boxes: Vec<String> = (0..self.boxes).map(Self::box_name).collect();
        let mut s = format!("(define (problem rnd{})\n  (:domain rnd)\n  (:objects robot1 - Robot {} - Box", self.seed, boxes.join(" "));
        if self.crates > 0 {
            let crates: Vec<String> = (1..=self.crates).map(|i| format!("c{i}")).collect();
            s += &format!(" {} - Crate", crates.join(" "));
        }
        s += ")\n  (:init";
        if self.open {
            s += " (Open robot1)";
        }
        for (p, row) in self.init.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                let a = format!("({} {})", PRED_NAMES[p], boxes[b]);
                s += &match v {
                    Init::True => format!(" {a}"),
                    Init::False => format!(" (not {a})"),
                    Init::Unknown => format!(" (unknown {a})"),
                };
            }
        }
        s += ")\n  (:goal (and";
        for &b in &self.goal_done {
            s += &format!(" (Done {})", boxes[b]);
        }
        for &(p, b, v) in &self.goal_lits {
            let a = format!("({} {})", PRED_NAMES[p], boxes[b]);
            s += &if v { format!(" {a}") } else { format!(" (not {a})") };
        }
        s += ")))\n";
        s
    }

    /// Hidden atoms, in the order worlds index them.
    pub fn unknowns(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (p, row) in self.init.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                if *v == Init::Unknown {
                    out.push((p, b));
                }
            }
        }
        out
    }

    /// One world per assignment of the hidden atoms; bit i of the world
    /// index is the value of the i-th unknown.
    pub fn world_json(&self) -> String {
        let unknowns = self.unknowns();
        let variants: Vec<serde_json::Value> = (0..1usize << unknowns.len())
            .map(|w| {
                let facts: Vec<String> = unknowns
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| w >> i & 1 == 1)
                    .map(|(_, &(p, b))| format!("({} {})", PRED_NAMES[p], Self::box_name(b)))
                    .collect();
                serde_json::json!({"name": format!("w{w}"), "facts": facts})
            })
            .collect();
        serde_json::json!({"task": format!("rnd{}", self.seed), "variants": variants}).to_string()
    }

    pub fn task(&self) -> Task {
        Task::from_sources(&format!("rnd{}", self.seed), &self.domain_text(), &self.problem_text(), &self.world_json())
            .expect("generated task loads")
    }

    fn start(&self) -> Node {
        let mut k = Vec::new();
        for row in &self.init {
            for v in row {
                k.push(match v {
                    Init::True => K::True,
                    Init::False => K::False,
                    Init::Unknown => K::Unknown,
                });
            }
        }
        Node {
            open: self.open,
            done: 0,
            k,
        }
    }

    fn idx(&self, p: usize, b: usize) -> usize {
        p * self.boxes + b
    }

    fn is_goal(&self, s: &Node) -> bool {
        self.goal_done.iter().all(|&b| s.done >> b & 1 == 1)
            && self
                .goal_lits
                .iter()
                .all(|&(p, b, v)| s.k[self.idx(p, b)] == if v { K::True } else { K::False })
    }

    /// Actions available in `s`, each with its set of possible successors.
    fn moves(&self, s: &Node) -> Vec<Vec<Node>> {
        let mut out = Vec::new();
        let with = |f: &dyn Fn(&mut Node)| {
            let mut t = s.clone();
            f(&mut t);
            t
        };
        out.push(vec![with(&|t| t.open = !t.open)]);
        for (p, r) in self.rules.iter().enumerate() {
            for b in 0..self.boxes {
                let i = self.idx(p, b);
                match s.k[i] {
                    K::Unknown if !r.lid || s.open => {
                        out.push(vec![with(&|t| t.k[i] = K::True), with(&|t| t.k[i] = K::False)]);
                    }
                    K::True if r.drain => out.push(vec![with(&|t| t.k[i] = K::False)]),
                    K::False if r.fill => out.push(vec![with(&|t| t.k[i] = K::True)]),
                    _ => {}
                }
            }
        }
        for b in 0..self.boxes {
            if s.done >> b & 1 == 1 {
                continue;
            }
            let ok = self.rules.iter().enumerate().all(|(p, r)| match r.finish {
                None => true,
                Some(v) => s.k[self.idx(p, b)] == if v { K::True } else { K::False },
            });
            if ok {
                out.push(vec![with(&|t| t.done |= 1 << b)]);
            }
        }
        out
    }

    fn reachable(&self) -> Vec<Node> {
        let start = self.start();
        let mut seen = HashSet::from([start.clone()]);
        let mut order = vec![start.clone()];
        let mut queue = VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            for outs in self.moves(&s) {
                for t in outs {
                    if seen.insert(t.clone()) {
                        order.push(t.clone());
                        queue.push_back(t);
                    }
                }
            }
        }
        order
    }

    pub fn belief_states(&self) -> usize {
        self.reachable().len()
    }

    /// AND-OR search: whether some policy reaches the goal whatever the
    /// inspections reveal. Least fixpoint over the reachable beliefs.
    pub fn and_or_wins(&self) -> bool {
        let states = self.reachable();
        let moves: HashMap<&Node, Vec<Vec<Node>>> = states.iter().map(|s| (s, self.moves(s))).collect();
        let mut win: HashSet<Node> = states.iter().filter(|s| self.is_goal(s)).cloned().collect();
        loop {
            let mut grew = false;
            for s in &states {
                if win.contains(s) {
                    continue;
                }
                if moves[s].iter().any(|outs| outs.iter().all(|t| win.contains(t))) {
                    win.insert(s.clone());
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        win.contains(&self.start())
    }

    /// Whether the goal is reachable when the hidden atoms take world `w`.
    pub fn world_solvable(&self, w: usize) -> bool {
        let truth: BTreeMap<usize, bool> = self
            .unknowns()
            .iter()
            .enumerate()
            .map(|(i, &(p, b))| (self.idx(p, b), w >> i & 1 == 1))
            .collect();
        let start = self.start();
        let mut seen = HashSet::from([start.clone()]);
        let mut queue = VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            if self.is_goal(&s) {
                return true;
            }
            for outs in self.moves(&s) {
                // an inspection only ever shows the hidden value
                let t = if outs.len() == 2 {
                    let i = (0..s.k.len()).find(|&i| outs[0].k[i] != s.k[i]).expect("inspect changes one atom");
                    if truth[&i] {
                        outs[0].clone()
                    } else {
                        outs[1].clone()
                    }
                } else {
                    outs[0].clone()
                };
                if seen.insert(t.clone()) {
                    queue.push_back(t);
                }
            }
        }
        false
    }

    pub fn worlds(&self) -> usize {
        1 << self.unknowns().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum K {
    True,
    False,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Node {
    open: bool,
    done: u8,
    k: Vec<K>,
}

/// Runs the agent with the ground-truth oracle in world `w`.
pub fn run_in_world(task: &Task, w: usize, config: &ExecConfig) -> EpisodeResult {
    let g = Arc::new(task.expand(w).expect("world expands"));
    let mut env = GraphEnv::new(g);
    let b0 = task.initial_belief().expect("initial belief");
    run_episode(&mut env, &mut GroundTruthOracle, &task.domain, &b0, &task.goal, config)
}

/// Outcome of one equivalence check.
#[derive(Debug, Clone)]
pub struct Agreement {
    pub seed: u64,
    pub oracle_wins: bool,
    pub agent_wins: bool,
    /// Worlds where the agent's result differs from plain reachability.
    pub world_mismatches: Vec<usize>,
}

pub fn equivalence(seed: u64) -> Agreement {
    let p = RandomProblem::generate(seed);
    let task = p.task();
    let config = ExecConfig {
        planner: bfs_config(),
        ..ExecConfig::default()
    };
    let mut agent_wins = true;
    let mut world_mismatches = Vec::new();
    for w in 0..p.worlds() {
        let r = run_in_world(&task, w, &config);
        agent_wins &= r.success;
        if r.success != p.world_solvable(w) {
            world_mismatches.push(w);
        }
    }
    Agreement {
        seed,
        oracle_wins: p.and_or_wins(),
        agent_wins,
        world_mismatches,
    }
}

// Property checks shared by the suites and the acceptance run. Each takes
// a seed and reports the first violation.

/// Compiled-domain properties that must hold for any source domain.
pub fn check_compiled(d: &beliefplan::model::Domain) -> Result<(), String> {
    let c = beliefplan::compile::compile(d).map_err(|e| e.to_string())?;
    let observe = d.operators.iter().filter(|o| o.is_observe()).count();
    let physical = d.operators.len() - observe;
    if c.classical.operators.len() != physical + 2 * observe {
        return Err(format!("{}: operator count {}", d.name, c.classical.operators.len()));
    }
    for p in &c.classical.predicates {
        if matches!(c.signature.get(&p.name).map(|i| &i.role), Some(PredicateRole::Belief { .. })) {
            return Err(format!("{}: belief predicate {} survived", d.name, p.name));
        }
    }
    for op in &c.classical.operators {
        let adds: Vec<_> = op.add_effects().collect();
        for a in &adds {
            let Some(PredicateRole::KnownTrue { .. }) = c.signature.get(&a.predicate).map(|i| &i.role) else { continue };
            let negated = a.with_predicate(a.predicate.replace('+', "-"));
            if adds.contains(&&negated) {
                return Err(format!("{}: {} adds {a} and {negated}", d.name, op.name));
            }
        }
    }
    Ok(())
}

pub fn compiler_case(seed: u64) -> Result<(), String> {
    let p = RandomProblem::generate(seed);
    let d = beliefplan::pddl::parse_domain(&p.domain_text()).map_err(|e| e.to_string())?;
    check_compiled(&d)
}

pub fn kleene_case(seed: u64) -> Result<(), String> {
    use beliefplan::logic::TruthValue::{self, *};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tv = || [True, False, Unknown][rng.gen_range(0..3)];
    let (a, b, c) = (tv(), tv(), tv());
    let refine = |x: TruthValue| if x == Unknown { [True, False, Unknown] } else { [x, x, x] };
    // information order: unknown sits below both known values
    let below = |x: TruthValue, y: TruthValue| x == Unknown || x == y;
    let ok = !!a == a
        && (a & b) == (b & a)
        && ((a & b) & c) == (a & (b & c))
        && !(a & b) == (!a | !b)
        && refine(a).iter().all(|&r| below(a & b, r & b));
    if ok {
        Ok(())
    } else {
        Err(format!("laws fail at {a} {b} {c}"))
    }
}

fn known_set(b: &BeliefState) -> BTreeSet<GroundAtom> {
    k_pairs(b)
        .into_iter()
        .filter(|(t, f)| b.facts().contains(t) || b.facts().contains(f))
        .map(|(t, _)| t)
        .collect()
}

/// Random walk of actions, reports and empty updates over a generated
/// problem: K pairs stay exclusive, knowledge never shrinks and an empty
/// update changes nothing.
pub fn belief_walk(seed: u64) -> Result<(), String> {
    use beliefplan::belief::Observation;
    use beliefplan::logic::TruthValue;

    let p = RandomProblem::generate(seed);
    let task = p.task();
    let mut b = task.initial_belief().map_err(|e| e.to_string())?;
    let actions: Vec<GroundAction> = task
        .domain
        .classical
        .operators
        .iter()
        .flat_map(|op| enumerate_groundings(op, &b.objects(), &task.domain.signature.types))
        .collect();
    let atoms: Vec<GroundAtom> = k_pairs(&b)
        .into_iter()
        .map(|(t, _)| t.with_predicate(t.predicate.trim_start_matches('K').trim_end_matches('+')))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for step in 0..40 {
        let before = known_set(&b);
        let next = match rng.gen_range(0..3) {
            0 => {
                let ok: Vec<&GroundAction> = actions.iter().filter(|a| b.apply_action_effects(a).is_ok()).collect();
                if ok.is_empty() {
                    continue;
                }
                b.apply_action_effects(ok[rng.gen_range(0..ok.len())]).map_err(|e| e.to_string())?
            }
            1 => {
                let a = atoms[rng.gen_range(0..atoms.len())].clone();
                let v = [TruthValue::True, TruthValue::False, TruthValue::Unknown][rng.gen_range(0..3)];
                let o = Observation {
                    reports: vec![(a, v)],
                    ..Observation::default()
                };
                b.belief_update(None, &o).map_err(|e| e.to_string())?.0
            }
            _ => {
                let n = b.belief_update(None, &Observation::default()).map_err(|e| e.to_string())?.0;
                if n.facts() != b.facts() {
                    return Err(format!("step {step}: empty update changed the belief"));
                }
                n
            }
        };
        for (t, f) in k_pairs(&next) {
            if next.facts().contains(&t) && next.facts().contains(&f) {
                return Err(format!("step {step}: {t} and {f} both set"));
            }
        }
        if !known_set(&next).is_superset(&before) {
            return Err(format!("step {step}: knowledge shrank"));
        }
        b = next;
    }
    Ok(())
}

/// BFS plans are valid, observe-gated and as short as the brute-force
/// search finds, for a generated problem in every world's starting belief.
pub fn plan_case(seed: u64) -> Result<(), String> {
    use beliefplan::planner::{check_observe_gating, plan_with, validate};

    let p = RandomProblem::generate(seed);
    let task = p.task();
    let b = task.initial_belief().map_err(|e| e.to_string())?;
    let expected = brute_force_len(&b, &task.goal, &task.domain, 100_000);
    match plan_with(&b, &task.goal, &task.domain, &bfs_config()) {
        Ok(plan) => {
            if !validate(&plan.actions, &b, &task.goal).valid {
                return Err("invalid plan".into());
            }
            check_observe_gating(&plan.actions, &b).map_err(|e| e.to_string())?;
            if expected != Some(plan.len()) {
                return Err(format!("plan length {} vs brute force {expected:?}", plan.len()));
            }
            let again = plan_with(&b, &task.goal, &task.domain, &bfs_config()).map_err(|e| e.to_string())?;
            if again.labels() != plan.labels() {
                return Err("plans differ between runs".into());
            }
        }
        Err(e) => {
            if expected.is_some() {
                return Err(format!("planner failed ({e}) but brute force found {expected:?}"));
            }
        }
    }
    Ok(())
}

/// Every world of a generated problem: reports agree with ground truth and
/// the exported graph validates whenever a goal node is reachable.
pub fn graph_case(seed: u64) -> Result<(), String> {
    let p = RandomProblem::generate(seed);
    let task = p.task();
    for w in 0..p.worlds() {
        let g = task.expand(w).map_err(|e| e.to_string())?;
        check_graph(&g)?;
    }
    Ok(())
}

pub fn check_graph(g: &TransitionGraph) -> Result<(), String> {
    for n in 0..g.node_count() {
        let truth = g.truth(n);
        for (a, v) in g.payload(n).reports {
            if let Some(v) = v.to_bool() {
                if v != truth.contains(&a) {
                    return Err(format!("{}: {a} reported {v}", g.node_id(n)));
                }
            }
        }
        let mut labels: Vec<&str> = g.outgoing(n).iter().map(|(l, _, _)| *l).collect();
        let total = labels.len();
        labels.sort();
        labels.dedup();
        if labels.len() != total {
            return Err(format!("{}: duplicate action edges", g.node_id(n)));
        }
    }
    let doc = beliefplan::sim::GraphDoc::from_graph(g);
    match (graph_bfs(g), doc.validate()) {
        (Some(d), Ok(s)) if s.optimal_length == d && g.optimal_length() == Some(d) => Ok(()),
        (None, Err(_)) if g.optimal_length().is_none() => Ok(()),
        (d, v) => Err(format!("reachability disagrees: bfs {d:?}, validate {v:?}")),
    }
}
