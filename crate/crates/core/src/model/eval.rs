use super::{Formula, GroundAtom, ModelError, PredicateRole, Signature, Term};
use crate::logic::TruthValue;

/// A store of binary fluents over a finite object set.
///
/// `holds` answers for stored (compiled) fluents with closed-world
/// semantics; three-valued belief atoms are derived from their knowledge
/// fluents by [`eval_atom`].
pub trait Valuation {
    fn signature(&self) -> &Signature;

    fn object_type(&self, name: &str) -> Option<&str>;

    /// Objects in name order.
    fn object_names(&self) -> Vec<&str>;

    fn holds(&self, atom: &GroundAtom) -> bool;
}

/// Evaluates a ground atom. Physical fluents and knowledge fluents are
/// closed-world (absent means false); belief atoms are `Unknown` unless one
/// of their knowledge fluents is stored.
pub fn eval_atom<V: Valuation + ?Sized>(atom: &GroundAtom, v: &V) -> Result<TruthValue, ModelError> {
    for a in &atom.args {
        if v.object_type(a).is_none() {
            return Err(ModelError::UnknownObject(a.clone()));
        }
    }
    let info = v
        .signature()
        .get(&atom.predicate)
        .ok_or_else(|| ModelError::UnknownPredicate(atom.predicate.clone()))?;
    Ok(match &info.role {
        PredicateRole::Belief { known_true, known_false } => {
            if v.holds(&atom.with_predicate(known_true.as_str())) {
                TruthValue::True
            } else if v.holds(&atom.with_predicate(known_false.as_str())) {
                TruthValue::False
            } else {
                TruthValue::Unknown
            }
        }
        _ => TruthValue::from(v.holds(atom)),
    })
}

/// Strong-Kleene evaluation. `forall` ranges over the objects of the bound
/// type currently present in the valuation.
pub fn eval_formula<V: Valuation + ?Sized>(f: &Formula, v: &V) -> Result<TruthValue, ModelError> {
    let mut scope = Vec::new();
    eval_in(f, v, &mut scope)
}

fn resolve(atom: &super::Atom, scope: &[(String, String)]) -> Result<GroundAtom, ModelError> {
    let mut args = Vec::with_capacity(atom.args.len());
    for t in &atom.args {
        match t {
            Term::Const(c) => args.push(c.clone()),
            Term::Var(x) => match scope.iter().rev().find(|(v, _)| v == x) {
                Some((_, o)) => args.push(o.clone()),
                None => return Err(ModelError::FreeVariable(x.clone())),
            },
        }
    }
    Ok(GroundAtom {
        predicate: atom.predicate.clone(),
        args,
    })
}

fn eval_in<V: Valuation + ?Sized>(
    f: &Formula,
    v: &V,
    scope: &mut Vec<(String, String)>,
) -> Result<TruthValue, ModelError> {
    match f {
        Formula::Atom(a) => eval_atom(&resolve(a, scope)?, v),
        Formula::Not(a) => Ok(!eval_atom(&resolve(a, scope)?, v)?),
        Formula::Unknown(a) => Ok(TruthValue::from(eval_atom(&resolve(a, scope)?, v)? == TruthValue::Unknown)),
        Formula::And(fs) => {
            let mut acc = TruthValue::True;
            for x in fs {
                acc = acc & eval_in(x, v, scope)?;
            }
            Ok(acc)
        }
        Formula::Forall { var, ty, body } => {
            let types = &v.signature().types;
            let members: Vec<String> = v
                .object_names()
                .into_iter()
                .filter(|o| v.object_type(o).is_some_and(|t| types.is_subtype(t, ty)))
                .map(str::to_string)
                .collect();
            let mut acc = TruthValue::True;
            for o in members {
                scope.push((var.clone(), o));
                let r = eval_in(body, v, scope);
                scope.pop();
                acc = acc & r?;
            }
            Ok(acc)
        }
    }
}
