use std::collections::{BTreeSet, HashMap};

use crate::belief::BeliefState;
use crate::compile::CompiledDomain;
use crate::model::{enumerate_groundings, Formula, GroundAction, GroundAtom, ModelError, Term, Valuation};

use super::PlanError;

/// A closed, negation-on-atoms conjunction as literal lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Conjunction {
    pub pos: Vec<GroundAtom>,
    pub neg: Vec<GroundAtom>,
}

/// Expands `forall` over the valuation's objects and flattens conjunctions.
pub fn flatten<V: Valuation + ?Sized>(f: &Formula, v: &V) -> Result<Conjunction, ModelError> {
    let mut out = Conjunction::default();
    go(f, v, &mut Vec::new(), &mut out)?;
    Ok(out)
}

fn resolve(a: &crate::model::Atom, scope: &[(String, String)]) -> Result<GroundAtom, ModelError> {
    let args = a
        .args
        .iter()
        .map(|t| match t {
            Term::Const(c) => Ok(c.clone()),
            Term::Var(x) => scope
                .iter()
                .rev()
                .find(|(v, _)| v == x)
                .map(|(_, o)| o.clone())
                .ok_or_else(|| ModelError::FreeVariable(x.clone())),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GroundAtom::new(a.predicate.clone(), args))
}

fn go<V: Valuation + ?Sized>(
    f: &Formula,
    v: &V,
    scope: &mut Vec<(String, String)>,
    out: &mut Conjunction,
) -> Result<(), ModelError> {
    match f {
        Formula::Atom(a) => out.pos.push(resolve(a, scope)?),
        Formula::Not(a) => out.neg.push(resolve(a, scope)?),
        Formula::Unknown(a) => return Err(ModelError::UnknownPredicate(format!("unknown {a}"))),
        Formula::And(fs) => {
            for x in fs {
                go(x, v, scope, out)?;
            }
        }
        Formula::Forall { var, ty, body } => {
            let types = &v.signature().types;
            let members: Vec<String> = v
                .object_names()
                .into_iter()
                .filter(|o| v.object_type(o).is_some_and(|t| types.is_subtype(t, ty)))
                .map(str::to_string)
                .collect();
            for o in members {
                scope.push((var.clone(), o));
                let r = go(body, v, scope, out);
                scope.pop();
                r?;
            }
        }
    }
    Ok(())
}

/// Ground action over fluent indices.
#[derive(Debug, Clone)]
pub struct IndexedAction {
    pub pre_pos: Vec<usize>,
    pub pre_neg: Vec<usize>,
    pub add: Vec<usize>,
    pub del: Vec<usize>,
}

/// The grounded search problem for one belief and goal.
#[derive(Debug, Clone)]
pub struct GroundProblem {
    pub fluents: Vec<GroundAtom>,
    pub index: HashMap<GroundAtom, usize>,
    /// Ground actions sorted by (name, args).
    pub actions: Vec<GroundAction>,
    pub indexed: Vec<IndexedAction>,
    pub init: Vec<bool>,
    pub goal_pos: Vec<usize>,
    pub goal_neg: Vec<usize>,
    /// Set when a static goal literal is already false.
    pub goal_impossible: bool,
}

impl GroundProblem {
    fn fluent(&mut self, a: &GroundAtom) -> usize {
        if let Some(&i) = self.index.get(a) {
            return i;
        }
        self.fluents.push(a.clone());
        self.index.insert(a.clone(), self.fluents.len() - 1);
        self.fluents.len() - 1
    }
}

/// Grounds the classical operators over the belief's objects. Literals over
/// predicates that no operator changes are decided here against the belief
/// and dropped from the search problem.
pub fn ground_problem(
    b: &BeliefState,
    goal: &Formula,
    domain: &CompiledDomain,
    cap: usize,
) -> Result<GroundProblem, PlanError> {
    let mut dynamic: BTreeSet<&str> = BTreeSet::new();
    for op in &domain.classical.operators {
        for l in &op.effects {
            dynamic.insert(l.atom.predicate.as_str());
        }
    }
    let objects = b.objects();
    let types = &domain.signature.types;

    let mut total: usize = 0;
    for op in &domain.classical.operators {
        let mut n: usize = 1;
        for p in &op.params {
            let k = objects.iter().filter(|o| types.is_subtype(&o.ty, &p.ty)).count();
            n = n.saturating_mul(k);
        }
        total = total.saturating_add(n);
    }
    if total > cap {
        return Err(PlanError::GroundingExplosion { count: total, cap });
    }

    let mut gp = GroundProblem {
        fluents: Vec::new(),
        index: HashMap::new(),
        actions: Vec::new(),
        indexed: Vec::new(),
        init: Vec::new(),
        goal_pos: Vec::new(),
        goal_neg: Vec::new(),
        goal_impossible: false,
    };

    let mut ops: Vec<_> = domain.classical.operators.iter().collect();
    ops.sort_by(|a, b| a.name.cmp(&b.name));
    let mut candidates = Vec::new();
    for op in ops {
        'ground: for a in enumerate_groundings(op, &objects, types) {
            let pre = flatten(&a.precondition, b)?;
            let mut keep = Conjunction::default();
            for p in pre.pos {
                if dynamic.contains(p.predicate.as_str()) {
                    keep.pos.push(p);
                } else if !b.holds(&p) {
                    continue 'ground;
                }
            }
            for n in pre.neg {
                if dynamic.contains(n.predicate.as_str()) {
                    keep.neg.push(n);
                } else if b.holds(&n) {
                    continue 'ground;
                }
            }
            candidates.push((a, keep));
        }
    }
    candidates.sort_by(|x, y| (&x.0.name, &x.0.args).cmp(&(&y.0.name, &y.0.args)));

    for (a, keep) in candidates {
        let ia = IndexedAction {
            pre_pos: keep.pos.iter().map(|x| gp.fluent(x)).collect(),
            pre_neg: keep.neg.iter().map(|x| gp.fluent(x)).collect(),
            add: a.add.iter().map(|x| gp.fluent(x)).collect(),
            del: a.delete.iter().map(|x| gp.fluent(x)).collect(),
        };
        gp.actions.push(a);
        gp.indexed.push(ia);
    }

    let g = flatten(goal, b)?;
    for p in g.pos {
        if dynamic.contains(p.predicate.as_str()) {
            let i = gp.fluent(&p);
            gp.goal_pos.push(i);
        } else if !b.holds(&p) {
            gp.goal_impossible = true;
        }
    }
    for n in g.neg {
        if dynamic.contains(n.predicate.as_str()) {
            let i = gp.fluent(&n);
            gp.goal_neg.push(i);
        } else if b.holds(&n) {
            gp.goal_impossible = true;
        }
    }
    gp.init = gp.fluents.iter().map(|f| b.holds(f)).collect();
    Ok(gp)
}
