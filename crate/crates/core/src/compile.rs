//! Knowledge-fluent compilation and optimistic determinization.
//!
//! Every belief predicate `P` becomes the pair `KP+` / `KP-`; an observe
//! action `O` on `P` is split into `O+` (adds `KP+`) and `O-` (adds `KP-`).

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::model::{
    known_false_name, known_true_name, Atom, Domain, Formula, Literal, OperatorKind, OperatorSchema, PredicateKind,
    PredicateRole, PredicateSchema, Signature,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("observe action `{0}` has no observed atom")]
    ObserveWithoutTarget(String),
    #[error("observe action `{0}` has effects; observation and world change must be separate actions")]
    ObserveWithEffects(String),
    #[error("action `{op}` observes `{predicate}`, which is not a belief predicate")]
    ObservedNotBelief { op: String, predicate: String },
    #[error("`unknown` applied to physical predicate `{0}`")]
    UnknownOnPhysical(String),
    #[error("goal mentions `(unknown {0})`")]
    UnknownInGoal(String),
    #[error("action `{op}` both sets and clears `{atom}`")]
    ConflictingEffects { op: String, atom: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledDomain {
    pub source: Domain,
    /// Binary-fluent domain. After [`determinize`] it is plain STRIPS with
    /// negative preconditions.
    pub classical: Domain,
    /// Vocabulary of the source domain, including the derived K fluents.
    pub signature: Arc<Signature>,
    /// Belief predicate → (known-true, known-false) fluent names.
    pub belief_map: BTreeMap<String, (String, String)>,
    /// Observe operator → (positive variant, negative variant).
    pub observe_map: BTreeMap<String, (String, String)>,
}

impl CompiledDomain {
    pub fn lower_goal(&self, goal: &Formula) -> Result<Formula, CompileError> {
        lower_goal(goal, &self.signature)
    }

    pub fn physical_count(&self) -> usize {
        self.source.operators.iter().filter(|o| !o.is_observe()).count()
    }

    pub fn observe_count(&self) -> usize {
        self.source.operators.iter().filter(|o| o.is_observe()).count()
    }
}

fn k_atom(sig: &Signature, a: &Atom, positive: bool) -> Option<Atom> {
    match &sig.get(&a.predicate)?.role {
        PredicateRole::Belief { known_true, known_false } => {
            Some(a.with_predicate(if positive { known_true } else { known_false }.as_str()))
        }
        _ => None,
    }
}

fn push_flat(out: &mut Vec<Formula>, f: Formula) {
    match f {
        Formula::And(fs) => fs.into_iter().for_each(|x| push_flat(out, x)),
        other => {
            if !out.contains(&other) {
                out.push(other);
            }
        }
    }
}

/// Rewrites a precondition over compiled fluents: `P` to `KP+`, `not P` to
/// `KP-`, `unknown P` to `not KP+ and not KP-`. Conjunctions are flattened
/// and duplicate conjuncts dropped.
pub fn lower_formula(f: &Formula, sig: &Signature) -> Result<Formula, CompileError> {
    Ok(match f {
        Formula::Atom(a) => Formula::Atom(k_atom(sig, a, true).unwrap_or_else(|| a.clone())),
        Formula::Not(a) => match k_atom(sig, a, false) {
            Some(k) => Formula::Atom(k),
            None => Formula::Not(a.clone()),
        },
        Formula::Unknown(a) => {
            let (Some(kt), Some(kf)) = (k_atom(sig, a, true), k_atom(sig, a, false)) else {
                return Err(CompileError::UnknownOnPhysical(a.predicate.clone()));
            };
            Formula::And(vec![Formula::Not(kt), Formula::Not(kf)])
        }
        Formula::And(fs) => {
            let mut out = Vec::new();
            for x in fs {
                push_flat(&mut out, lower_formula(x, sig)?);
            }
            if out.len() == 1 {
                out.pop().unwrap()
            } else {
                Formula::And(out)
            }
        }
        Formula::Forall { var, ty, body } => Formula::Forall {
            var: var.clone(),
            ty: ty.clone(),
            body: Box::new(lower_formula(body, sig)?),
        },
    })
}

/// Lowers a goal. Goals may not ask for ignorance.
pub fn lower_goal(goal: &Formula, sig: &Signature) -> Result<Formula, CompileError> {
    let mut unknown = None;
    goal_unknowns(goal, &mut unknown);
    if let Some(a) = unknown {
        return Err(CompileError::UnknownInGoal(a));
    }
    lower_formula(goal, sig)
}

fn goal_unknowns(f: &Formula, found: &mut Option<String>) {
    match f {
        Formula::Unknown(a) if found.is_none() => *found = Some(a.to_string()),
        Formula::And(fs) => fs.iter().for_each(|x| goal_unknowns(x, found)),
        Formula::Forall { body, .. } => goal_unknowns(body, found),
        _ => {}
    }
}

fn lower_effects(op: &OperatorSchema, sig: &Signature) -> Result<Vec<Literal>, CompileError> {
    let mut out: Vec<Literal> = Vec::new();
    for lit in &op.effects {
        match (k_atom(sig, &lit.atom, true), k_atom(sig, &lit.atom, false)) {
            (Some(kt), Some(kf)) => {
                let (add, del) = if lit.positive { (kt, kf) } else { (kf, kt) };
                out.push(Literal::pos(add));
                out.push(Literal::neg(del));
            }
            _ => out.push(lit.clone()),
        }
    }
    for (i, a) in out.iter().enumerate() {
        for b in &out[i + 1..] {
            if a.atom == b.atom && a.positive != b.positive {
                return Err(CompileError::ConflictingEffects {
                    op: op.name.clone(),
                    atom: a.atom.to_string(),
                });
            }
        }
    }
    out.dedup();
    Ok(out)
}

fn uses_forall(f: &Formula) -> bool {
    match f {
        Formula::Forall { .. } => true,
        Formula::And(fs) => fs.iter().any(uses_forall),
        _ => false,
    }
}

/// Fluent layer: replaces belief predicates by their K pairs and rewrites
/// preconditions and effects. Observe actions are kept whole.
pub fn compile_predicates(d: &Domain) -> Result<CompiledDomain, CompileError> {
    let sig = Signature::from_domain(d);
    let mut classical = Domain::new(d.name.clone());
    classical.types = d.types.clone();
    let mut belief_map = BTreeMap::new();
    for p in &d.predicates {
        match p.kind {
            PredicateKind::Physical => classical.predicates.push(p.clone()),
            PredicateKind::Belief => {
                let (kt, kf) = (known_true_name(&p.name), known_false_name(&p.name));
                for n in [&kt, &kf] {
                    classical.predicates.push(PredicateSchema {
                        name: n.clone(),
                        params: p.params.clone(),
                        kind: PredicateKind::Physical,
                    });
                }
                belief_map.insert(p.name.clone(), (kt, kf));
            }
        }
    }

    for op in &d.operators {
        let precondition = lower_formula(&op.precondition, &sig)?;
        let mut out = OperatorSchema {
            name: op.name.clone(),
            params: op.params.clone(),
            precondition,
            effects: Vec::new(),
            kind: op.kind.clone(),
            observed: op.observed.clone(),
        };
        match op.kind {
            OperatorKind::Observe => {
                let obs = op
                    .observed
                    .as_ref()
                    .ok_or_else(|| CompileError::ObserveWithoutTarget(op.name.clone()))?;
                if !op.effects.is_empty() {
                    return Err(CompileError::ObserveWithEffects(op.name.clone()));
                }
                if !sig.is_belief(&obs.predicate) {
                    return Err(CompileError::ObservedNotBelief {
                        op: op.name.clone(),
                        predicate: obs.predicate.clone(),
                    });
                }
            }
            _ => out.effects = lower_effects(op, &sig)?,
        }
        classical.operators.push(out);
    }

    Ok(CompiledDomain {
        source: d.clone(),
        classical,
        signature: Arc::new(sig),
        belief_map,
        observe_map: BTreeMap::new(),
    })
}

/// Splits every observe action into its two outcome variants. Both keep the
/// observe precondition plus `not KP+ and not KP-`; each adds one K fluent.
pub fn determinize(mut c: CompiledDomain) -> Result<CompiledDomain, CompileError> {
    let mut ops = Vec::with_capacity(c.classical.operators.len());
    for op in std::mem::take(&mut c.classical.operators) {
        if op.kind != OperatorKind::Observe {
            ops.push(op);
            continue;
        }
        let obs = op
            .observed
            .clone()
            .ok_or_else(|| CompileError::ObserveWithoutTarget(op.name.clone()))?;
        let (kt, kf) = match (k_atom(&c.signature, &obs, true), k_atom(&c.signature, &obs, false)) {
            (Some(t), Some(f)) => (t, f),
            _ => {
                return Err(CompileError::ObservedNotBelief {
                    op: op.name.clone(),
                    predicate: obs.predicate.clone(),
                })
            }
        };
        let mut pre = Vec::new();
        push_flat(&mut pre, op.precondition.clone());
        push_flat(&mut pre, Formula::Not(kt.clone()));
        push_flat(&mut pre, Formula::Not(kf.clone()));
        let pre = Formula::And(pre);

        let names = (format!("{}+", op.name), format!("{}-", op.name));
        for (name, positive, k) in [(&names.0, true, &kt), (&names.1, false, &kf)] {
            ops.push(OperatorSchema {
                name: name.clone(),
                params: op.params.clone(),
                precondition: pre.clone(),
                effects: vec![Literal::pos(k.clone())],
                kind: OperatorKind::ObserveVariant {
                    base: op.name.clone(),
                    positive,
                },
                observed: Some(obs.clone()),
            });
        }
        c.observe_map.insert(op.name.clone(), names);
    }
    c.classical.operators = ops;

    let mut req: Vec<String> = [":strips", ":typing", ":negative-preconditions"].map(String::from).to_vec();
    if c.classical.operators.iter().any(|o| uses_forall(&o.precondition)) {
        req.push(":universal-preconditions".into());
    }
    c.classical.requirements = req;
    Ok(c)
}

/// Both passes.
pub fn compile(d: &Domain) -> Result<CompiledDomain, CompileError> {
    determinize(compile_predicates(d)?)
}
