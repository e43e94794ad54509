use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use super::grounding::GroundProblem;
use super::heuristic::HAdd;

pub(crate) type State = Vec<u64>;

pub(crate) fn pack(bits: &[bool]) -> State {
    let mut s = vec![0u64; bits.len().div_ceil(64).max(1)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            s[i / 64] |= 1 << (i % 64);
        }
    }
    s
}

#[inline]
pub(crate) fn test(s: &[u64], i: usize) -> bool {
    s[i / 64] >> (i % 64) & 1 == 1
}

fn applicable(gp: &GroundProblem, s: &[u64], a: usize) -> bool {
    let ia = &gp.indexed[a];
    ia.pre_pos.iter().all(|&f| test(s, f)) && ia.pre_neg.iter().all(|&f| !test(s, f))
}

fn successor(gp: &GroundProblem, s: &[u64], a: usize) -> State {
    let ia = &gp.indexed[a];
    let mut t = s.to_vec();
    for &f in &ia.del {
        t[f / 64] &= !(1 << (f % 64));
    }
    for &f in &ia.add {
        t[f / 64] |= 1 << (f % 64);
    }
    t
}

pub(crate) fn is_goal(gp: &GroundProblem, s: &[u64]) -> bool {
    gp.goal_pos.iter().all(|&f| test(s, f)) && gp.goal_neg.iter().all(|&f| !test(s, f))
}

pub(crate) enum Outcome {
    Found(Vec<usize>),
    Exhausted,
    /// Search stopped after visiting `cap` states.
    Capped,
}

struct Tree {
    nodes: Vec<(State, usize, usize)>,
    seen: HashMap<State, usize>,
}

impl Tree {
    fn new(root: State) -> Self {
        let mut seen = HashMap::new();
        seen.insert(root.clone(), 0);
        Tree {
            nodes: vec![(root, usize::MAX, usize::MAX)],
            seen,
        }
    }

    fn insert(&mut self, s: State, parent: usize, action: usize) -> Option<usize> {
        if self.seen.contains_key(&s) {
            return None;
        }
        let id = self.nodes.len();
        self.seen.insert(s.clone(), id);
        self.nodes.push((s, parent, action));
        Some(id)
    }

    fn path(&self, mut id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        while self.nodes[id].1 != usize::MAX {
            out.push(self.nodes[id].2);
            id = self.nodes[id].1;
        }
        out.reverse();
        out
    }
}

/// Breadth-first search; optimal in plan length. Successors are generated
/// in action order, so ties resolve lexicographically.
pub(crate) fn bfs(gp: &GroundProblem, cap: Option<usize>) -> Outcome {
    let root = pack(&gp.init);
    if is_goal(gp, &root) {
        return Outcome::Found(Vec::new());
    }
    let mut tree = Tree::new(root);
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        let s = tree.nodes[id].0.clone();
        for a in 0..gp.actions.len() {
            if !applicable(gp, &s, a) {
                continue;
            }
            let t = successor(gp, &s, a);
            let goal = is_goal(gp, &t);
            if let Some(nid) = tree.insert(t, id, a) {
                if goal {
                    return Outcome::Found(tree.path(nid));
                }
                if cap.is_some_and(|c| tree.nodes.len() > c) {
                    return Outcome::Capped;
                }
                queue.push_back(nid);
            }
        }
    }
    Outcome::Exhausted
}

/// Greedy best-first search on h_add. Ties break on insertion order.
pub(crate) fn gbfs(gp: &GroundProblem) -> Outcome {
    let h = HAdd::new(gp);
    let root = pack(&gp.init);
    if is_goal(gp, &root) {
        return Outcome::Found(Vec::new());
    }
    let Some(h0) = h.eval(&root) else { return Outcome::Exhausted };
    let mut tree = Tree::new(root);
    let mut open = BinaryHeap::from([Reverse((h0, 0usize))]);
    while let Some(Reverse((_, id))) = open.pop() {
        let s = tree.nodes[id].0.clone();
        for a in 0..gp.actions.len() {
            if !applicable(gp, &s, a) {
                continue;
            }
            let t = successor(gp, &s, a);
            if is_goal(gp, &t) {
                if let Some(nid) = tree.insert(t, id, a) {
                    return Outcome::Found(tree.path(nid));
                }
                continue;
            }
            let Some(ht) = h.eval(&t) else { continue };
            if let Some(nid) = tree.insert(t, id, a) {
                open.push(Reverse((ht, nid)));
            }
        }
    }
    Outcome::Exhausted
}
