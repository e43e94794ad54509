mod common;

use beliefplan::logic::TruthValue;
use beliefplan::model::GroundAtom;
use beliefplan::sim::*;
use proptest::prelude::*;

#[test]
fn shipped_graphs_are_valid() {
    for name in TASK_NAMES {
        let t = task(name).unwrap();
        for v in 0..t.variant_count() {
            let g = graph(name, v).unwrap();
            common::check_graph(&g).unwrap_or_else(|e| panic!("{name}/{v}: {e}"));
            assert_eq!(g.optimal_length(), common::graph_bfs(&g));
        }
    }
}

#[test]
fn optimal_lengths() {
    let l = |name: &str| -> Vec<usize> {
        (0..task(name).unwrap().variant_count())
            .map(|v| graph(name, v).unwrap().optimal_length().unwrap())
            .collect()
    };
    assert_eq!(l("sort-weight"), [14, 14, 14]);
    assert_eq!(l("cup-pick-place"), [11]);
    assert_eq!(l("drawer-cleaning"), [9, 10]);
}

#[test]
fn unknown_task() {
    assert!(matches!(load_task("bogus", 0), Err(SimError::UnknownTask(n)) if n == "bogus"));
}

#[test]
fn drawer_contents_start_hidden() {
    let g = graph("drawer-cleaning", 0).unwrap();
    let p = g.payload(g.initial());
    assert!(!p.visible.iter().any(|d| d.label == "block"));
    assert!(g.truth(g.initial()).contains(&GroundAtom::new("Inside", ["block1", "drawer1"])));
    assert_eq!(
        p.reports.get(&GroundAtom::new("ContainerEmpty", ["drawer1"])).copied().unwrap_or(TruthValue::Unknown),
        TruthValue::Unknown
    );
    // looking into the open drawer shows the block
    let mut n = g.initial();
    let path = ["MoveTo(robot1,table1,drawer1)", "OpenDrawer(robot1,drawer1)", "LookInDrawer(robot1,drawer1)"];
    for a in path {
        let (o, next) = g.step(n, a);
        assert_eq!(o, StepOutcome::Success, "{a}");
        n = next;
    }
    let p = g.payload(n);
    assert!(p.visible.iter().any(|d| d.label == "block"));
    assert_eq!(p.reports[&GroundAtom::new("ContainerEmpty", ["drawer1"])], TruthValue::False);
}

#[test]
fn sort_weight_has_weighing_edges() {
    let g = graph("sort-weight", 0).unwrap();
    let weighs = (0..g.node_count())
        .flat_map(|n| g.outgoing(n))
        .filter(|(l, o, _)| l.starts_with("Weigh(") && *o == StepOutcome::Success)
        .count();
    assert!(weighs > 0);
}

#[test]
fn missing_edge_fails_in_place() {
    let g = graph("cup-pick-place", 0).unwrap();
    let n = g.initial();
    assert_eq!(g.step(n, "Fly(robot1)"), (StepOutcome::Fail, n));
    assert_eq!(g.step(n, "MoveTo(robot1,table1,box1)"), g.step(n, "MoveTo(robot1,table1,box1)"));
}

#[test]
fn variants_follow_seeds() {
    let t = task("sort-weight").unwrap();
    let picks: Vec<usize> = (0..30).map(|s| t.variant_for_seed(s)).collect();
    assert_eq!(picks, (0..30).map(|s| t.variant_for_seed(s)).collect::<Vec<_>>());
    for v in 0..3 {
        assert!(picks.contains(&v));
    }
    assert_eq!(load_task("sort-weight", 7).unwrap().variant, t.variant_for_seed(7));
}

#[test]
fn graph_document_round_trips() {
    let g = graph("drawer-cleaning", 1).unwrap();
    let doc = GraphDoc::from_graph(&g);
    let text = serde_json::to_string(&doc).unwrap();
    let back: GraphDoc = serde_json::from_str(&text).unwrap();
    assert_eq!(back, doc);
    let s = back.validate().unwrap();
    assert_eq!((s.nodes, s.edges, s.optimal_length), (g.node_count(), g.edge_count(), 10));
}

#[test]
fn validation_reports_broken_documents() {
    let g = graph("cup-pick-place", 0).unwrap();
    let mut doc = GraphDoc::from_graph(&g);
    doc.edges[0].to = "s999999".into();
    let dup = doc.edges[1].clone();
    doc.edges.push(dup);
    let first = doc.nodes.keys().next().unwrap().clone();
    doc.ground_truth.insert(first.clone(), Vec::new());
    let errs = doc.validate().unwrap_err();
    assert!(errs.iter().any(|e| e.contains("s999999")));
    assert!(errs.iter().any(|e| e.contains("duplicate")));

    let mut doc = GraphDoc::from_graph(&g);
    doc.goals.clear();
    assert!(doc.validate().is_err());
}

#[test]
fn unsound_report_rejected() {
    let g = graph("drawer-cleaning", 0).unwrap();
    let mut doc = GraphDoc::from_graph(&g);
    let (id, node) = doc.nodes.iter_mut().find(|(_, n)| !n.reports.is_empty()).unwrap();
    let (a, v) = node.reports.iter().find(|(_, v)| v.is_known()).map(|(a, v)| (a.clone(), *v)).unwrap();
    node.reports.insert(a, !v);
    let id = id.clone();
    let errs = doc.validate().unwrap_err();
    assert!(errs.iter().any(|e| e.contains(&id)), "{errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_worlds_are_sound(seed in any::<u64>()) {
        prop_assert_eq!(common::graph_case(seed), Ok(()));
    }
}
