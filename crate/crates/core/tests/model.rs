use std::collections::BTreeMap;

use beliefplan::model::*;

fn desk() -> TypeHierarchy {
    let mut t = TypeHierarchy::new();
    t.declare("BaseObject", None);
    t.declare("Movable", Some("BaseObject".into()));
    t.declare("Cup", Some("Movable".into()));
    t
}

#[test]
fn subtype_chain() {
    let t = desk();
    assert!(t.is_subtype("Cup", "BaseObject"));
    assert!(t.is_subtype("Cup", "object"));
    assert!(!t.is_subtype("BaseObject", "Cup"));
    assert!(t.validate().is_ok());
}

#[test]
fn cycle_and_dangling_parent_rejected() {
    let mut t = desk();
    t.declare("BaseObject", Some("Cup".into()));
    assert!(matches!(t.validate(), Err(ModelError::TypeCycle(_))));

    let mut t = TypeHierarchy::new();
    t.declare("A", Some("Missing".into()));
    assert_eq!(t.validate(), Err(ModelError::UnknownType("Missing".into())));
}


#[test]
fn ground_atom_text_round_trip() {
    let a = GroundAtom::new("On", ["cup1", "table1"]);
    assert_eq!(a.to_string(), "(On cup1 table1)");
    assert_eq!("(On cup1 table1)".parse::<GroundAtom>().unwrap(), a);
    assert_eq!("(HandEmpty)".parse::<GroundAtom>().unwrap(), GroundAtom::new::<&str>("HandEmpty", []));
}

#[test]
fn action_labels() {
    assert_eq!(action_label("Pick", &["cup1".into()]), "Pick(cup1)");
    assert_eq!(
        parse_action_label("Place(a,b)"),
        Some(("Place".into(), vec!["a".into(), "b".into()]))
    );
    assert_eq!(parse_action_label("Noop()"), Some(("Noop".into(), vec![])));
}

#[test]
fn forall_shadows_outer_binding() {
    let f = Formula::Forall {
        var: "x".into(),
        ty: "cup".into(),
        body: Box::new(Formula::Atom(Atom::new("P", vec![Term::Var("x".into()), Term::Var("y".into())]))),
    };
    let b = BTreeMap::from([("x".to_string(), "c1".to_string()), ("y".to_string(), "t".to_string())]);
    assert_eq!(f.substitute(&b).to_string(), "(forall (?x - cup) (P ?x t))");
    assert_eq!(f.free_vars(), vec!["y".to_string()]);
}


fn pick() -> OperatorSchema {
    let o = || vec![Term::Var("o".into())];
    OperatorSchema {
        name: "Pick".into(),
        params: vec![Param::new("o", "cup")],
        precondition: Formula::And(vec![
            Formula::Atom(Atom::new("HandEmpty", vec![])),
            Formula::Atom(Atom::new("CanGrasp", o())),
        ]),
        effects: vec![
            Literal::neg(Atom::new("HandEmpty", vec![])),
            Literal::pos(Atom::new("Holding", o())),
        ],
        kind: OperatorKind::Physical,
        observed: None,
    }
}

fn types() -> TypeHierarchy {
    let mut t = TypeHierarchy::new();
    t.declare("cup", None);
    t.declare("table", None);
    t
}

#[test]
fn ground_pick() {
    let b = BTreeMap::from([("o".to_string(), ObjectRef::new("cup1", "cup"))]);
    let a = ground(&pick(), &b, &types()).unwrap();
    assert_eq!(a.label(), "Pick(cup1)");
    assert_eq!(a.add[0].to_string(), "(Holding cup1)");
    assert_eq!(a.delete[0].to_string(), "(HandEmpty)");
}

#[test]
fn ground_errors() {
    let b = BTreeMap::from([("o".to_string(), ObjectRef::new("table1", "table"))]);
    assert!(matches!(ground(&pick(), &b, &types()), Err(ModelError::TypeMismatch { .. })));
    assert_eq!(
        ground(&pick(), &BTreeMap::new(), &types()),
        Err(ModelError::MissingBinding("o".into()))
    );
}

#[test]
fn enumeration_counts_and_order() {
    let objs = vec![
        ObjectRef::new("cup2", "cup"),
        ObjectRef::new("table1", "table"),
        ObjectRef::new("cup1", "cup"),
    ];
    let labels: Vec<String> = enumerate_groundings(&pick(), &objs, &types()).iter().map(|a| a.label()).collect();
    assert_eq!(labels, ["Pick(cup1)", "Pick(cup2)"]);

    let three: Vec<ObjectRef> = (1..=3).map(|i| ObjectRef::new(format!("c{i}"), "cup")).collect();
    assert_eq!(enumerate_groundings(&pick(), &three, &types()).len(), 3);

    let tables = vec![ObjectRef::new("table1", "table")];
    assert!(enumerate_groundings(&pick(), &tables, &types()).is_empty());
}

#[test]
fn forall_matches_explicit_conjunction() {
    use beliefplan::belief::BeliefState;
    use beliefplan::compile::compile;
    use beliefplan::logic::TruthValue;
    use beliefplan::pddl::{parse_domain, parse_goal, parse_problem};

    let d = parse_domain(
        "(define (domain q) (:types Box Crate - object) (:predicates (Sealed ?b - Box)) \
         (:belief-predicates (Full ?b - Box)))",
    )
    .unwrap();
    let c = compile(&d).unwrap();
    for n in 0..=6usize {
        let names: Vec<String> = (1..=n).map(|i| format!("b{i}")).collect();
        let boxes = if n == 0 { String::new() } else { format!("{} - Box ", names.join(" ")) };
        let p = parse_problem(
            &format!("(define (problem q) (:domain q) (:objects {boxes}c1 - Crate) (:init) (:goal (and)))"),
            &d,
        )
        .unwrap();
        let b0 = BeliefState::from_problem(&c, &p).unwrap();
        let objects = b0.objects();
        let forall = parse_goal("(forall (?x - Box) (and (Full ?x) (not (Sealed ?x))))", &d, &objects).unwrap();
        let parts: Vec<String> = names.iter().map(|x| format!("(Full {x}) (not (Sealed {x}))")).collect();
        let explicit = parse_goal(&format!("(and {})", parts.join(" ")), &d, &objects).unwrap();
        for code in 0..3usize.pow(n as u32) * 2usize.pow(n as u32) {
            let mut b = b0.clone();
            let mut k = code;
            for x in &names {
                let v = [TruthValue::True, TruthValue::False, TruthValue::Unknown][k % 3];
                k /= 3;
                b.assign(&GroundAtom::new("Full", [x.as_str()]), v).unwrap();
                b.assign(&GroundAtom::new("Sealed", [x.as_str()]), TruthValue::from(k % 2 == 1)).unwrap();
                k /= 2;
            }
            assert_eq!(b.eval(&forall).unwrap(), b.eval(&explicit).unwrap(), "{n} objects, case {code}");
        }
    }
}

#[test]
fn grounding_order_is_stable() {
    use beliefplan::pddl::parse_domain;

    let d = parse_domain(include_str!("../tasks/drawer-cleaning/domain.bpddl")).unwrap();
    let types = beliefplan::model::Signature::from_domain(&d).types;
    let objs = |rev: bool| {
        let mut v = vec![
            ObjectRef::new("robot1", "Robot"),
            ObjectRef::new("table2", "Table"),
            ObjectRef::new("table1", "Table"),
            ObjectRef::new("drawer1", "Drawer"),
            ObjectRef::new("cup1", "Movable"),
        ];
        if rev {
            v.reverse();
        }
        v
    };
    for op in &d.operators {
        let a: Vec<String> = enumerate_groundings(op, &objs(false), &types).iter().map(|g| g.label()).collect();
        let b: Vec<String> = enumerate_groundings(op, &objs(true), &types).iter().map(|g| g.label()).collect();
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_by_key(|l| beliefplan::model::parse_action_label(l).unwrap().1);
        assert_eq!(a, sorted);
    }
}
