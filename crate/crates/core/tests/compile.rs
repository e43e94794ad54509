use beliefplan::compile::*;
use beliefplan::model::{Atom, Formula};
use beliefplan::pddl::parse_domain;

#[test]
fn no_beliefs_is_identity_on_operators() {
    let d = parse_domain(include_str!("../domains/pick.bpddl")).unwrap();
    let c = compile(&d).unwrap();
    assert_eq!(c.classical.operators, d.operators);
    assert_eq!(c.classical.predicates, d.predicates);
    assert!(c.belief_map.is_empty());
}

#[test]
fn physical_belief_effect_sets_k_pair() {
    let d = parse_domain(
        "(define (domain t) (:types C) (:belief-predicates (Empty ?c - C)) \
         (:action Dump :parameters (?c - C) :precondition (not (Empty ?c)) :effect (Empty ?c)))",
    )
    .unwrap();
    let c = compile(&d).unwrap();
    let op = &c.classical.operators[0];
    assert_eq!(op.precondition.to_string(), "(KEmpty- ?c)");
    let eff: Vec<String> = op.effects.iter().map(|l| l.to_string()).collect();
    assert_eq!(eff, ["(KEmpty+ ?c)", "(not (KEmpty- ?c))"]);
}

#[test]
fn rejects_bad_observes() {
    let bad = |body: &str| {
        let text = format!(
            "(define (domain t) (:types C) (:predicates (Open ?c - C)) \
             (:belief-predicates (Empty ?c - C)) (:action Look :parameters (?c - C) {body}))"
        );
        compile(&parse_domain(&text).unwrap()).unwrap_err()
    };
    assert!(matches!(
        bad(":observe (Empty ?c) :effect (Open ?c)"),
        CompileError::ObserveWithEffects(_)
    ));
    assert!(matches!(bad(":observe (Open ?c)"), CompileError::ObservedNotBelief { .. }));
}

#[test]
fn unknown_goal_rejected() {
    let d = parse_domain(include_str!("../domains/observe_emptiness.bpddl")).unwrap();
    let c = compile(&d).unwrap();
    let g = Formula::Unknown(Atom::new("Empty", vec![beliefplan::model::Term::Const("c".into())]));
    assert!(matches!(c.lower_goal(&g), Err(CompileError::UnknownInGoal(_))));
}

mod common;

use std::collections::{BTreeSet, HashSet, VecDeque};

use beliefplan::belief::BeliefState;
use beliefplan::model::enumerate_groundings;
use beliefplan::pddl::{parse_problem, write_domain};
use proptest::prelude::*;

fn corpus() -> Vec<(&'static str, &'static str)> {
    vec![
        ("pick", include_str!("../domains/pick.bpddl")),
        ("observe_emptiness", include_str!("../domains/observe_emptiness.bpddl")),
        ("appendix", include_str!("../domains/appendix.bpddl")),
        ("cup-pick-place", include_str!("../tasks/cup-pick-place/domain.bpddl")),
        ("drawer-cleaning", include_str!("../tasks/drawer-cleaning/domain.bpddl")),
        ("sort-weight", include_str!("../tasks/sort-weight/domain.bpddl")),
    ]
}

#[test]
fn observe_emptiness_golden() {
    let d = parse_domain(include_str!("../domains/observe_emptiness.bpddl")).unwrap();
    let c = compile(&d).unwrap();
    assert_eq!(write_domain(&c.classical), include_str!("golden/observe_emptiness.pddl"));

    let ops = &c.classical.operators;
    assert_eq!(ops.len(), 2);
    assert_eq!(ops[0].name, "ObserveEmptiness+");
    assert_eq!(ops[1].name, "ObserveEmptiness-");
    assert_eq!(ops[0].params, ops[1].params);
    assert_eq!(ops[0].precondition, ops[1].precondition);
    let pre = ops[0].precondition.to_string();
    assert!(pre.contains("(not (KEmpty+ ?o))") && pre.contains("(not (KEmpty- ?o))"));
    let effects: Vec<Vec<String>> = ops.iter().map(|o| o.effects.iter().map(|e| e.to_string()).collect()).collect();
    assert_eq!(effects, [vec!["(KEmpty+ ?o)".to_string()], vec!["(KEmpty- ?o)".to_string()]]);
}

#[test]
fn corpus_compiles_cleanly() {
    for (name, text) in corpus() {
        let d = parse_domain(text).unwrap();
        common::check_compiled(&d).unwrap_or_else(|e| panic!("{name}: {e}"));
        // observe variants come in adjacent pairs with equal preconditions
        let c = compile(&d).unwrap();
        for op in c.classical.operators.iter().filter(|o| o.name.ends_with('+')) {
            let minus = c.classical.operator(&op.name.replace('+', "-")).unwrap();
            assert_eq!(op.precondition, minus.precondition);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_domains_keep_k_pairs_exclusive(seed in any::<u64>()) {
        let p = common::RandomProblem::generate(seed);
        let d = parse_domain(&p.domain_text()).unwrap();
        prop_assert_eq!(common::check_compiled(&d), Ok(()));
    }
}

/// Every belief reachable within `depth` steps, capped at `cap` states.
fn reachable(b: &BeliefState, c: &CompiledDomain, depth: usize, cap: usize) -> Vec<BeliefState> {
    let actions: Vec<_> = c
        .classical
        .operators
        .iter()
        .flat_map(|op| enumerate_groundings(op, &b.objects(), &c.signature.types))
        .collect();
    let mut seen: HashSet<BTreeSet<_>> = HashSet::from([b.facts().clone()]);
    let mut out = vec![b.clone()];
    let mut queue = VecDeque::from([(b.clone(), 0)]);
    while let Some((cur, d)) = queue.pop_front() {
        if d == depth || out.len() >= cap {
            continue;
        }
        for a in &actions {
            if let Ok(next) = cur.apply_action_effects(a) {
                if seen.insert(next.facts().clone()) {
                    out.push(next.clone());
                    queue.push_back((next, d + 1));
                }
            }
        }
    }
    out
}

fn no_conflicts(states: &[BeliefState]) {
    for s in states {
        for (kt, kf) in common::k_pairs(s) {
            assert!(!(s.facts().contains(&kt) && s.facts().contains(&kf)), "{kt} and {kf}");
        }
    }
}

#[test]
fn desk_instances_never_reach_conflicts() {
    let d = parse_domain(include_str!("../domains/observe_emptiness.bpddl")).unwrap();
    let p = parse_problem(
        "(define (problem desk) (:domain emptiness) (:objects cup1 cup2 bowl1 - object table1 - surface) \
         (:init (HandEmpty) (On cup1 table1) (On cup2 table1) (On bowl1 table1) (not (Empty bowl1))) \
         (:goal (and (Empty cup1) (not (Empty cup2)))))",
        &d,
    )
    .unwrap();
    let c = compile(&d).unwrap();
    let b = BeliefState::from_problem(&c, &p).unwrap();
    let states = reachable(&b, &c, 8, 50_000);
    assert_eq!(states.len(), 9);
    no_conflicts(&states);

    for name in ["cup-pick-place", "drawer-cleaning"] {
        let t = beliefplan::sim::task(name).unwrap();
        let b = t.initial_belief().unwrap();
        no_conflicts(&reachable(&b, &t.domain, 8, 50_000));
    }
}
