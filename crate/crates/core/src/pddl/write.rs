use std::fmt::Write;

use crate::logic::TruthValue;
use crate::model::{Domain, Formula, Param, PredicateKind, PredicateSchema, Problem};

fn params(ps: &[Param]) -> String {
    ps.iter()
        .map(|p| format!("?{} - {}", p.var, p.ty))
        .collect::<Vec<_>>()
        .join(" ")
}

fn predicate_line(out: &mut String, p: &PredicateSchema) {
    if p.params.is_empty() {
        let _ = writeln!(out, "    ({})", p.name);
    } else {
        let _ = writeln!(out, "    ({} {})", p.name, params(&p.params));
    }
}

/// Serializes a domain with a fixed layout; the output parses back to an
/// equal structure.
pub fn write_domain(d: &Domain) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", d.name);
    if !d.requirements.is_empty() {
        let _ = writeln!(out, "  (:requirements {})", d.requirements.join(" "));
    }
    if !d.types.is_empty() {
        out.push_str("  (:types\n");
        for (t, parent) in d.types.iter() {
            match parent {
                Some(p) => {
                    let _ = writeln!(out, "    {t} - {p}");
                }
                None => {
                    let _ = writeln!(out, "    {t} - object");
                }
            }
        }
        out.push_str("  )\n");
    }
    for (kind, header) in [
        (PredicateKind::Physical, ":predicates"),
        (PredicateKind::Belief, ":belief-predicates"),
    ] {
        let ps: Vec<_> = d.predicates.iter().filter(|p| p.kind == kind).collect();
        if ps.is_empty() {
            continue;
        }
        let _ = writeln!(out, "  ({header}");
        for p in ps {
            predicate_line(&mut out, p);
        }
        out.push_str("  )\n");
    }
    for op in &d.operators {
        let _ = writeln!(out, "  (:action {}", op.name);
        let _ = writeln!(out, "   :parameters ({})", params(&op.params));
        let _ = writeln!(out, "   :precondition {}", op.precondition);
        let effects: Vec<String> = op.effects.iter().map(|l| l.to_string()).collect();
        if effects.is_empty() {
            out.push_str("   :effect (and)");
        } else {
            let _ = write!(out, "   :effect (and {})", effects.join(" "));
        }
        if let (crate::model::OperatorKind::Observe, Some(obs)) = (&op.kind, &op.observed) {
            let _ = write!(out, "\n   :observe {obs}");
        }
        out.push_str(")\n");
    }
    out.push_str(")\n");
    out
}

/// Serializes a problem. Unknown belief atoms are written with the
/// `(unknown ...)` marker.
pub fn write_problem(p: &Problem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", p.name);
    let _ = writeln!(out, "  (:domain {})", p.domain);
    if !p.objects.is_empty() {
        out.push_str("  (:objects\n");
        for o in &p.objects {
            let _ = writeln!(out, "    {} - {}", o.name, o.ty);
        }
        out.push_str("  )\n");
    }
    out.push_str("  (:init\n");
    for (a, v) in &p.init {
        let _ = match v {
            TruthValue::True => writeln!(out, "    {a}"),
            TruthValue::False => writeln!(out, "    (not {a})"),
            TruthValue::Unknown => writeln!(out, "    (unknown {a})"),
        };
    }
    out.push_str("  )\n");
    let _ = writeln!(out, "  (:goal {})", goal_text(&p.goal));
    out.push_str(")\n");
    out
}

fn goal_text(g: &Formula) -> String {
    g.to_string()
}
