//! Symbolic vocabulary shared by every other module: types, objects,
//! predicates, formulas and operator schemas.

mod eval;
mod ground;
mod signature;
mod types;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::TruthValue;

pub use eval::{eval_atom, eval_formula, Valuation};
pub use ground::{enumerate_groundings, ground};
pub use signature::{known_false_name, known_true_name, PredicateInfo, PredicateRole, Signature};
pub use types::TypeHierarchy;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("type hierarchy has a cycle through `{0}`")]
    TypeCycle(String),
    #[error("`{object}` has type `{actual}`, but `?{var}` expects `{expected}`")]
    TypeMismatch {
        var: String,
        object: String,
        expected: String,
        actual: String,
    },
    #[error("no binding for `?{0}`")]
    MissingBinding(String),
    #[error("free variable `?{0}`")]
    FreeVariable(String),
    #[error("`{predicate}` expects {expected} arguments, found {found}")]
    Arity {
        predicate: String,
        expected: usize,
        found: usize,
    },
}

/// A typed object of a problem.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectRef {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

impl ObjectRef {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        ObjectRef {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

/// A typed parameter `?var - type`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Param {
    pub var: String,
    pub ty: String,
}

impl Param {
    pub fn new(var: impl Into<String>, ty: impl Into<String>) -> Self {
        Param {
            var: var.into(),
            ty: ty.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredicateKind {
    /// World-state fluent with closed-world semantics.
    Physical,
    /// Three-valued fluent, compiled into a pair of knowledge fluents.
    Belief,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateSchema {
    pub name: String,
    pub params: Vec<Param>,
    pub kind: PredicateKind,
}

impl PredicateSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn param_types(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| p.ty.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => f.write_str(c),
        }
    }
}

/// A possibly lifted atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn with_predicate(&self, predicate: impl Into<String>) -> Atom {
        Atom {
            predicate: predicate.into(),
            args: self.args.clone(),
        }
    }

    /// Substitutes bound variables; unbound variables are left in place.
    pub fn substitute(&self, bindings: &BTreeMap<String, String>) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => match bindings.get(v) {
                        Some(o) => Term::Const(o.clone()),
                        None => t.clone(),
                    },
                    Term::Const(_) => t.clone(),
                })
                .collect(),
        }
    }

    pub fn to_ground(&self) -> Result<GroundAtom, ModelError> {
        let args = self
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => Ok(c.clone()),
                Term::Var(v) => Err(ModelError::FreeVariable(v.clone())),
            })
            .collect::<Result<_, _>>()?;
        Ok(GroundAtom {
            predicate: self.predicate.clone(),
            args,
        })
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// A fully ground atom such as `(ContainerEmpty drawer1)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new<S: Into<String>>(predicate: impl Into<String>, args: impl IntoIterator<Item = S>) -> Self {
        GroundAtom {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn with_predicate(&self, predicate: impl Into<String>) -> GroundAtom {
        GroundAtom {
            predicate: predicate.into(),
            args: self.args.clone(),
        }
    }

    pub fn lift(&self) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|a| Term::Const(a.clone())).collect(),
        }
    }

    pub fn rename(&self, mut f: impl FnMut(&str) -> String) -> GroundAtom {
        GroundAtom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|a| f(a)).collect(),
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for GroundAtom {
    type Err = String;

    /// Parses `(Pred a b)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| format!("not an atom: {s:?}"))?;
        let mut parts = inner.split_whitespace();
        let predicate = parts.next().ok_or_else(|| format!("empty atom: {s:?}"))?;
        Ok(GroundAtom::new(predicate, parts))
    }
}

impl Serialize for GroundAtom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroundAtom {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A first-order formula. Negation is restricted to atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Atom),
    Not(Atom),
    /// Holds when the atom's value is not known (belief predicates only).
    Unknown(Atom),
    And(Vec<Formula>),
    Forall {
        var: String,
        ty: String,
        body: Box<Formula>,
    },
}

impl Formula {
    pub fn and(parts: Vec<Formula>) -> Formula {
        Formula::And(parts)
    }

    pub fn truth() -> Formula {
        Formula::And(Vec::new())
    }

    pub fn substitute(&self, bindings: &BTreeMap<String, String>) -> Formula {
        match self {
            Formula::Atom(a) => Formula::Atom(a.substitute(bindings)),
            Formula::Not(a) => Formula::Not(a.substitute(bindings)),
            Formula::Unknown(a) => Formula::Unknown(a.substitute(bindings)),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.substitute(bindings)).collect()),
            Formula::Forall { var, ty, body } => {
                let body = if bindings.contains_key(var) {
                    let mut inner = bindings.clone();
                    inner.remove(var);
                    body.substitute(&inner)
                } else {
                    body.substitute(bindings)
                };
                Formula::Forall {
                    var: var.clone(),
                    ty: ty.clone(),
                    body: Box::new(body),
                }
            }
        }
    }

    /// Calls `f` on every atom together with its polarity marker.
    pub fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a Atom)) {
        match self {
            Formula::Atom(a) | Formula::Not(a) | Formula::Unknown(a) => f(a),
            Formula::And(fs) => fs.iter().for_each(|x| x.visit_atoms(f)),
            Formula::Forall { body, .. } => body.visit_atoms(f),
        }
    }

    /// Variables not bound by an enclosing `forall`.
    pub fn free_vars(&self) -> Vec<String> {
        fn go(f: &Formula, bound: &mut Vec<String>, out: &mut Vec<String>) {
            match f {
                Formula::Atom(a) | Formula::Not(a) | Formula::Unknown(a) => {
                    for v in a.vars() {
                        if !bound.iter().any(|b| b == v) && !out.iter().any(|o| o == v) {
                            out.push(v.to_string());
                        }
                    }
                }
                Formula::And(fs) => fs.iter().for_each(|x| go(x, bound, out)),
                Formula::Forall { var, body, .. } => {
                    bound.push(var.clone());
                    go(body, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Top-level conjuncts, with nested conjunctions flattened.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        fn go<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
            match f {
                Formula::And(fs) => fs.iter().for_each(|x| go(x, out)),
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(a) => write!(f, "(not {a})"),
            Formula::Unknown(a) => write!(f, "(unknown {a})"),
            Formula::And(fs) => {
                f.write_str("(and")?;
                for x in fs {
                    write!(f, " {x}")?;
                }
                f.write_str(")")
            }
            Formula::Forall { var, ty, body } => write!(f, "(forall (?{var} - {ty}) {body})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { atom, positive: false }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Physical,
    /// Information-gathering action declared with an `:observe` target.
    Observe,
    /// One deterministic outcome of a split observe action.
    ObserveVariant { base: String, positive: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorSchema {
    pub name: String,
    pub params: Vec<Param>,
    pub precondition: Formula,
    pub effects: Vec<Literal>,
    pub kind: OperatorKind,
    /// The belief atom an observe action reveals.
    pub observed: Option<Atom>,
}

impl OperatorSchema {
    pub fn add_effects(&self) -> impl Iterator<Item = &Atom> {
        self.effects.iter().filter(|l| l.positive).map(|l| &l.atom)
    }

    pub fn delete_effects(&self) -> impl Iterator<Item = &Atom> {
        self.effects.iter().filter(|l| !l.positive).map(|l| &l.atom)
    }

    pub fn is_observe(&self) -> bool {
        !matches!(self.kind, OperatorKind::Physical)
    }
}

/// How a ground action relates to observation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ActionKind {
    Physical,
    Observe {
        base: String,
        observed: GroundAtom,
        /// The outcome a determinized variant assumes; `None` before splitting.
        outcome: Option<bool>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundAction {
    pub name: String,
    pub args: Vec<String>,
    /// Ground precondition; quantifiers are expanded against the current
    /// object set when the action is evaluated.
    pub precondition: Formula,
    pub add: Vec<GroundAtom>,
    pub delete: Vec<GroundAtom>,
    pub kind: ActionKind,
}

impl GroundAction {
    /// `Name(a,b)` form used in traces and graph edge labels.
    pub fn label(&self) -> String {
        action_label(&self.name, &self.args)
    }

    pub fn is_observe(&self) -> bool {
        matches!(self.kind, ActionKind::Observe { .. })
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub fn action_label(name: &str, args: &[String]) -> String {
    format!("{}({})", name, args.join(","))
}

/// Splits `Name(a,b)` into its name and arguments.
pub fn parse_action_label(label: &str) -> Option<(String, Vec<String>)> {
    let open = label.find('(')?;
    let inner = label[open + 1..].strip_suffix(')')?;
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(|s| s.trim().to_string()).collect()
    };
    Some((label[..open].to_string(), args))
}

/// A parsed domain: types, predicate schemas and operator schemas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    pub types: TypeHierarchy,
    pub predicates: Vec<PredicateSchema>,
    pub operators: Vec<OperatorSchema>,
}

impl Domain {
    pub fn new(name: impl Into<String>) -> Self {
        Domain {
            name: name.into(),
            requirements: Vec::new(),
            types: TypeHierarchy::new(),
            predicates: Vec::new(),
            operators: Vec::new(),
        }
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateSchema> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn operator(&self, name: &str) -> Option<&OperatorSchema> {
        self.operators.iter().find(|o| o.name == name)
    }

    pub fn belief_predicates(&self) -> impl Iterator<Item = &PredicateSchema> {
        self.predicates.iter().filter(|p| p.kind == PredicateKind::Belief)
    }
}

/// A problem: objects, an initial valuation and a goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    pub objects: Vec<ObjectRef>,
    /// Initial atoms. Physical atoms are listed when true; belief atoms may
    /// carry any of the three values.
    pub init: Vec<(GroundAtom, TruthValue)>,
    pub goal: Formula,
}
