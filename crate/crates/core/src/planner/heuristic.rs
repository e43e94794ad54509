use super::grounding::GroundProblem;
use super::search::test;

const INF: u64 = u64::MAX;

/// Additive delete-relaxation heuristic. Negative preconditions read a
/// complement fluent that is true when the original is false and is added
/// by every action deleting the original.
pub(crate) struct HAdd {
    n: usize,
    /// comp[f] is the complement index of fluent f, if f is ever required false.
    comp: Vec<Option<usize>>,
    pre: Vec<Vec<usize>>,
    eff: Vec<Vec<usize>>,
    goal: Vec<usize>,
    width: usize,
}

impl HAdd {
    pub(crate) fn new(gp: &GroundProblem) -> Self {
        let n = gp.fluents.len();
        let mut comp = vec![None; n];
        let mut width = n;
        let needs = gp.indexed.iter().flat_map(|a| a.pre_neg.iter()).chain(gp.goal_neg.iter());
        for &f in needs {
            if comp[f].is_none() {
                comp[f] = Some(width);
                width += 1;
            }
        }
        let pre = gp
            .indexed
            .iter()
            .map(|a| {
                a.pre_pos
                    .iter()
                    .copied()
                    .chain(a.pre_neg.iter().map(|&f| comp[f].expect("complement")))
                    .collect()
            })
            .collect();
        let eff = gp
            .indexed
            .iter()
            .map(|a| a.add.iter().copied().chain(a.del.iter().filter_map(|&f| comp[f])).collect())
            .collect();
        let goal = gp
            .goal_pos
            .iter()
            .copied()
            .chain(gp.goal_neg.iter().map(|&f| comp[f].expect("complement")))
            .collect();
        HAdd {
            n,
            comp,
            pre,
            eff,
            goal,
            width,
        }
    }

    /// `None` when the goal is unreachable even under the relaxation.
    pub(crate) fn eval(&self, s: &[u64]) -> Option<u64> {
        let mut cost = vec![INF; self.width];
        for f in 0..self.n {
            if test(s, f) {
                cost[f] = 0;
            } else if let Some(c) = self.comp[f] {
                cost[c] = 0;
            }
        }
        loop {
            let mut changed = false;
            for (pre, eff) in self.pre.iter().zip(&self.eff) {
                let mut c: u64 = 1;
                for &p in pre {
                    if cost[p] == INF {
                        c = INF;
                        break;
                    }
                    c = c.saturating_add(cost[p]);
                }
                if c == INF {
                    continue;
                }
                for &e in eff {
                    if c < cost[e] {
                        cost[e] = c;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut h: u64 = 0;
        for &g in &self.goal {
            if cost[g] == INF {
                return None;
            }
            h = h.saturating_add(cost[g]);
        }
        Some(h)
    }
}
