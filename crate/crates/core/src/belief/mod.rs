//! The agent's belief: conjectured objects plus a valuation over compiled
//! fluents. Physical fluents are closed-world, belief atoms are open-world.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compile::CompiledDomain;
use crate::logic::TruthValue;
use crate::model::{
    eval_atom, eval_formula, Formula, GroundAction, GroundAtom, ModelError, ObjectRef, PredicateRole, Problem,
    Signature, Valuation,
};

/// Metadata key holding the perception identity of an object.
pub const HANDLE: &str = "handle";
/// Metadata key holding the detection label used for fresh names.
pub const LABEL: &str = "label";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BeliefError {
    #[error("precondition of {action} is {value}, not true")]
    PreconditionViolated { action: String, value: TruthValue },
    #[error("observation reports {0} both true and false")]
    InconsistentReport(String),
    #[error("report mentions unknown handle `{0}`")]
    UnknownHandle(String),
    #[error("`{0}` cannot be reported directly")]
    NotReportable(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectInfo {
    #[serde(rename = "type")]
    pub ty: String,
    /// Opaque per-object data (handle, label, location, ...). Never read by
    /// the planner.
    pub meta: BTreeMap<String, String>,
}

/// One perceived object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub handle: String,
    pub label: String,
    #[serde(rename = "type")]
    pub ty: String,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionOutcome {
    Succeeded,
    Failed,
}

/// What the agent perceives after a step. Report atoms name objects by
/// handle.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Observation {
    pub detections: Vec<Detection>,
    pub reports: Vec<(GroundAtom, TruthValue)>,
    pub outcome: Option<ActionOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeliefState {
    signature: Arc<Signature>,
    objects: BTreeMap<String, ObjectInfo>,
    facts: BTreeSet<GroundAtom>,
    step: u64,
}

impl Valuation for BeliefState {
    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn object_type(&self, name: &str) -> Option<&str> {
        self.objects.get(name).map(|o| o.ty.as_str())
    }

    fn object_names(&self) -> Vec<&str> {
        self.objects.keys().map(String::as_str).collect()
    }

    fn holds(&self, atom: &GroundAtom) -> bool {
        self.facts.contains(atom)
    }
}

impl BeliefState {
    pub fn new(signature: Arc<Signature>) -> Self {
        BeliefState {
            signature,
            objects: BTreeMap::new(),
            facts: BTreeSet::new(),
            step: 0,
        }
    }

    /// Initial belief of a problem. Problem objects use their own name as
    /// handle.
    pub fn from_problem(domain: &CompiledDomain, problem: &Problem) -> Result<Self, BeliefError> {
        let mut b = BeliefState::new(domain.signature.clone());
        for o in &problem.objects {
            b.insert_object(&o.name, &o.ty, &o.name, &o.name);
        }
        for (atom, value) in &problem.init {
            b.assign(atom, *value)?;
        }
        Ok(b)
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn facts(&self) -> &BTreeSet<GroundAtom> {
        &self.facts
    }

    pub fn object_info(&self, name: &str) -> Option<&ObjectInfo> {
        self.objects.get(name)
    }

    /// Objects sorted by name.
    pub fn objects(&self) -> Vec<ObjectRef> {
        self.objects
            .iter()
            .map(|(n, i)| ObjectRef::new(n.clone(), i.ty.clone()))
            .collect()
    }

    pub fn object_by_handle(&self, handle: &str) -> Option<&str> {
        self.objects
            .iter()
            .find(|(_, i)| i.meta.get(HANDLE).map(String::as_str) == Some(handle))
            .map(|(n, _)| n.as_str())
    }

    pub fn handle_of(&self, name: &str) -> Option<&str> {
        self.objects.get(name)?.meta.get(HANDLE).map(String::as_str)
    }

    pub fn insert_object(&mut self, name: &str, ty: &str, handle: &str, label: &str) {
        let meta = BTreeMap::from([(HANDLE.to_string(), handle.to_string()), (LABEL.to_string(), label.to_string())]);
        self.objects.insert(name.to_string(), ObjectInfo { ty: ty.to_string(), meta });
    }

    /// Sets a source-level atom: belief atoms through their K fluents,
    /// physical atoms directly. `Unknown` leaves the belief unchanged.
    pub fn assign(&mut self, atom: &GroundAtom, value: TruthValue) -> Result<(), BeliefError> {
        for a in &atom.args {
            if !self.objects.contains_key(a) {
                return Err(ModelError::UnknownObject(a.clone()).into());
            }
        }
        let info = self
            .signature
            .get(&atom.predicate)
            .ok_or_else(|| ModelError::UnknownPredicate(atom.predicate.clone()))?;
        if info.param_types.len() != atom.args.len() {
            return Err(ModelError::Arity {
                predicate: atom.predicate.clone(),
                expected: info.param_types.len(),
                found: atom.args.len(),
            }
            .into());
        }
        let Some(v) = value.to_bool() else { return Ok(()) };
        match &info.role {
            PredicateRole::Belief { known_true, known_false } => {
                let (set, clear) = if v { (known_true, known_false) } else { (known_false, known_true) };
                self.facts.remove(&atom.with_predicate(clear.as_str()));
                self.facts.insert(atom.with_predicate(set.as_str()));
            }
            PredicateRole::Physical => {
                if v {
                    self.facts.insert(atom.clone());
                } else {
                    self.facts.remove(atom);
                }
            }
            PredicateRole::KnownTrue { .. } | PredicateRole::KnownFalse { .. } => {
                return Err(BeliefError::NotReportable(atom.predicate.clone()))
            }
        }
        Ok(())
    }

    pub fn value(&self, atom: &GroundAtom) -> Result<TruthValue, ModelError> {
        eval_atom(atom, self)
    }

    pub fn eval(&self, f: &Formula) -> Result<TruthValue, ModelError> {
        eval_formula(f, self)
    }

    /// True iff the lowered goal evaluates to true; unknown is unsatisfied.
    pub fn goal_satisfied(&self, goal: &Formula) -> bool {
        matches!(self.eval(goal), Ok(TruthValue::True))
    }

    pub fn is_unknown(&self, atom: &GroundAtom) -> bool {
        matches!(self.value(atom), Ok(TruthValue::Unknown))
    }

    pub fn is_known(&self, atom: &GroundAtom) -> bool {
        matches!(self.value(atom), Ok(TruthValue::True | TruthValue::False))
    }

    pub fn believes_true(&self, atom: &GroundAtom) -> bool {
        matches!(self.value(atom), Ok(TruthValue::True))
    }

    pub fn believes_false(&self, atom: &GroundAtom) -> bool {
        matches!(self.value(atom), Ok(TruthValue::False))
    }

    /// Applies the action's add and delete lists. The precondition must be
    /// true; unknown does not license execution.
    pub fn apply_action_effects(&self, a: &GroundAction) -> Result<BeliefState, BeliefError> {
        let value = self.eval(&a.precondition)?;
        if value != TruthValue::True {
            return Err(BeliefError::PreconditionViolated {
                action: a.label(),
                value,
            });
        }
        let mut b = self.clone();
        b.apply_unchecked(a);
        Ok(b)
    }

    fn apply_unchecked(&mut self, a: &GroundAction) {
        for d in &a.delete {
            self.facts.remove(d);
        }
        for x in &a.add {
            self.facts.insert(x.clone());
        }
    }

    /// Merges detections into the object set. A detection whose handle is
    /// already known updates that object's metadata; any other becomes a
    /// fresh object named `<label><n>`.
    pub fn associate_objects(&self, detections: &[Detection]) -> (BeliefState, Vec<ObjectRef>) {
        let mut b = self.clone();
        let mut fresh = Vec::new();
        for d in detections {
            if let Some(name) = b.object_by_handle(&d.handle).map(str::to_string) {
                let info = b.objects.get_mut(&name).expect("object exists");
                for (k, v) in &d.meta {
                    info.meta.insert(k.clone(), v.clone());
                }
                continue;
            }
            let same_label = b
                .objects
                .values()
                .filter(|i| i.meta.get(LABEL) == Some(&d.label))
                .count();
            let mut n = same_label + 1;
            let name = loop {
                let candidate = format!("{}{}", d.label, n);
                if !b.objects.contains_key(&candidate) {
                    break candidate;
                }
                n += 1;
            };
            b.insert_object(&name, &d.ty, &d.handle, &d.label);
            let info = b.objects.get_mut(&name).expect("just inserted");
            for (k, v) in &d.meta {
                info.meta.entry(k.clone()).or_insert_with(|| v.clone());
            }
            fresh.push(ObjectRef::new(name, d.ty.clone()));
        }
        (b, fresh)
    }

    /// One belief revision step: associate detections, apply the action's
    /// physical effects when it succeeded, then apply reports. Observe
    /// variants contribute nothing themselves; their K fluent comes from the
    /// report.
    pub fn belief_update(
        &self,
        action: Option<&GroundAction>,
        o: &Observation,
    ) -> Result<(BeliefState, Vec<ObjectRef>), BeliefError> {
        let (mut b, fresh) = self.associate_objects(&o.detections);

        if let Some(a) = action {
            if o.outcome == Some(ActionOutcome::Succeeded) && !a.is_observe() {
                b.apply_unchecked(a);
            }
        }

        let mut seen: BTreeMap<GroundAtom, bool> = BTreeMap::new();
        let mut translated = Vec::with_capacity(o.reports.len());
        for (atom, value) in &o.reports {
            let mut args = Vec::with_capacity(atom.args.len());
            for h in &atom.args {
                let name = b.object_by_handle(h).ok_or_else(|| BeliefError::UnknownHandle(h.clone()))?;
                args.push(name.to_string());
            }
            let atom = GroundAtom::new(atom.predicate.clone(), args);
            if let Some(v) = value.to_bool() {
                if seen.insert(atom.clone(), v).is_some_and(|prev| prev != v) {
                    return Err(BeliefError::InconsistentReport(atom.to_string()));
                }
            }
            translated.push((atom, *value));
        }
        for (atom, value) in translated {
            b.assign(&atom, value)?;
        }
        b.step += 1;
        Ok((b, fresh))
    }

    /// Source atoms whose value is known, as K fluent atoms.
    pub fn known_atoms(&self) -> BTreeSet<GroundAtom> {
        self.facts
            .iter()
            .filter(|a| {
                matches!(
                    self.signature.get(&a.predicate).map(|i| &i.role),
                    Some(PredicateRole::KnownTrue { .. } | PredicateRole::KnownFalse { .. })
                )
            })
            .cloned()
            .collect()
    }

    /// Line-oriented dump: objects, true physical atoms, then every belief
    /// atom over the current objects with its value.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for (n, i) in &self.objects {
            let _ = writeln!(out, "object {n} - {}", i.ty);
        }
        for f in &self.facts {
            if matches!(self.signature.get(&f.predicate).map(|i| &i.role), Some(PredicateRole::Physical)) {
                let _ = writeln!(out, "{f} true");
            }
        }
        let objects = self.objects();
        for (p, info) in self.signature.source_predicates() {
            if !matches!(info.role, PredicateRole::Belief { .. }) {
                continue;
            }
            for args in typed_tuples(&info.param_types, &objects, &self.signature) {
                let atom = GroundAtom::new(p, args);
                let v = self.value(&atom).unwrap_or(TruthValue::Unknown);
                let _ = writeln!(out, "{atom} {v}");
            }
        }
        out
    }

    /// Reads a [`snapshot`](Self::snapshot). Object metadata is not
    /// preserved beyond handle and label.
    pub fn from_snapshot(text: &str, signature: Arc<Signature>) -> Result<BeliefState, BeliefError> {
        let mut b = BeliefState::new(signature);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix("object ") {
                let (name, ty) = rest
                    .split_once(" - ")
                    .ok_or_else(|| ModelError::UnknownObject(rest.to_string()))?;
                b.insert_object(name, ty, name, name);
                continue;
            }
            let (atom, value) = line
                .rsplit_once(' ')
                .ok_or_else(|| ModelError::UnknownPredicate(line.to_string()))?;
            let atom: GroundAtom = atom.parse().map_err(|_| ModelError::UnknownPredicate(atom.to_string()))?;
            let value: TruthValue = value.parse().map_err(|_| ModelError::UnknownPredicate(line.to_string()))?;
            b.assign(&atom, value)?;
        }
        Ok(b)
    }
}

/// All argument tuples over `objects` matching `types`, in name order.
pub fn typed_tuples(types: &[String], objects: &[ObjectRef], sig: &Signature) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for t in types {
        let domain: Vec<&ObjectRef> = objects.iter().filter(|o| sig.types.is_subtype(&o.ty, t)).collect();
        out = out
            .into_iter()
            .flat_map(|prefix| {
                domain.iter().map(move |o| {
                    let mut p = prefix.clone();
                    p.push(o.name.clone());
                    p
                })
            })
            .collect();
    }
    out
}
