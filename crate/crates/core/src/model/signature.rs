use std::collections::BTreeMap;

use super::{Domain, PredicateKind, TypeHierarchy};

/// Name of the known-true fluent for a belief predicate: `K<Pred>+`.
pub fn known_true_name(base: &str) -> String {
    format!("K{base}+")
}

/// Name of the known-false fluent for a belief predicate: `K<Pred>-`.
pub fn known_false_name(base: &str) -> String {
    format!("K{base}-")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredicateRole {
    Physical,
    Belief { known_true: String, known_false: String },
    KnownTrue { base: String },
    KnownFalse { base: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateInfo {
    pub param_types: Vec<String>,
    pub role: PredicateRole,
}

/// Resolved vocabulary: types plus every predicate name usable in a
/// formula, including the knowledge fluents derived from belief predicates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    pub types: TypeHierarchy,
    pub predicates: BTreeMap<String, PredicateInfo>,
}

impl Signature {
    pub fn from_domain(domain: &Domain) -> Signature {
        let mut predicates = BTreeMap::new();
        for p in &domain.predicates {
            let param_types: Vec<String> = p.params.iter().map(|x| x.ty.clone()).collect();
            match p.kind {
                PredicateKind::Physical => {
                    // compiled domains declare K fluents as ordinary predicates;
                    // keep the role of any already registered by a belief predicate
                    predicates.entry(p.name.clone()).or_insert(PredicateInfo {
                        param_types,
                        role: PredicateRole::Physical,
                    });
                }
                PredicateKind::Belief => {
                    let kt = known_true_name(&p.name);
                    let kf = known_false_name(&p.name);
                    predicates.insert(
                        kt.clone(),
                        PredicateInfo {
                            param_types: param_types.clone(),
                            role: PredicateRole::KnownTrue { base: p.name.clone() },
                        },
                    );
                    predicates.insert(
                        kf.clone(),
                        PredicateInfo {
                            param_types: param_types.clone(),
                            role: PredicateRole::KnownFalse { base: p.name.clone() },
                        },
                    );
                    predicates.insert(
                        p.name.clone(),
                        PredicateInfo {
                            param_types,
                            role: PredicateRole::Belief {
                                known_true: kt,
                                known_false: kf,
                            },
                        },
                    );
                }
            }
        }
        Signature {
            types: domain.types.clone(),
            predicates,
        }
    }

    pub fn get(&self, predicate: &str) -> Option<&PredicateInfo> {
        self.predicates.get(predicate)
    }

    pub fn is_belief(&self, predicate: &str) -> bool {
        matches!(self.get(predicate), Some(PredicateInfo { role: PredicateRole::Belief { .. }, .. }))
    }

    /// Source-level predicates (physical and belief), excluding derived K fluents.
    pub fn source_predicates(&self) -> impl Iterator<Item = (&str, &PredicateInfo)> {
        self.predicates.iter().filter_map(|(n, i)| match i.role {
            PredicateRole::Physical | PredicateRole::Belief { .. } => Some((n.as_str(), i)),
            _ => None,
        })
    }
}
