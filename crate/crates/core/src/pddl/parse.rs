use std::collections::BTreeMap;

use super::sexpr::{read_all, Pos, Sexp};
use super::PddlError;
use crate::logic::TruthValue;
use crate::model::{
    Atom, Domain, Formula, GroundAtom, Literal, ObjectRef, OperatorKind, OperatorSchema, Param, PredicateKind,
    PredicateRole, PredicateSchema, Problem, Signature, Term, TypeHierarchy,
};

fn parse_err(s: &Sexp, expected: &str) -> PddlError {
    PddlError::Parse {
        pos: s.pos(),
        expected: expected.to_string(),
        found: s.describe(),
    }
}

fn missing(pos: Pos, expected: &str) -> PddlError {
    PddlError::Parse {
        pos,
        expected: expected.to_string(),
        found: "end of list".into(),
    }
}

fn list<'a>(s: &'a Sexp, expected: &str) -> Result<&'a [Sexp], PddlError> {
    s.list().ok_or_else(|| parse_err(s, expected))
}

fn symbol<'a>(s: &'a Sexp, expected: &str) -> Result<&'a str, PddlError> {
    s.symbol().ok_or_else(|| parse_err(s, expected))
}

/// Expects `(define (<kind> NAME) ...)` and returns NAME and the sections.
fn header<'a>(kind: &str, top: &'a [Sexp]) -> Result<(String, &'a [Sexp]), PddlError> {
    let first = match top.len() {
        0 => {
            return Err(PddlError::Parse {
                pos: Pos { line: 1, col: 1 },
                expected: "`(define ...)`".into(),
                found: "end of input".into(),
            })
        }
        1 => &top[0],
        _ => return Err(parse_err(&top[1], "end of input")),
    };
    let items = list(first, "`(define ...)`")?;
    let head = items.first().ok_or_else(|| missing(first.pos(), "`define`"))?;
    if head.symbol() != Some("define") {
        return Err(parse_err(head, "`define`"));
    }
    let name_item = items.get(1).ok_or_else(|| missing(first.pos(), &format!("`({kind} NAME)`")))?;
    let name_list = list(name_item, &format!("`({kind} NAME)`"))?;
    match name_list {
        [k, n] if k.symbol() == Some(kind) => Ok((symbol(n, "name")?.to_string(), &items[2..])),
        _ => Err(parse_err(name_item, &format!("`({kind} NAME)`"))),
    }
}

/// Splits `a b - t c` into `(a, Some(t)), (b, Some(t)), (c, None)`.
fn typed_list(items: &[Sexp]) -> Result<Vec<(String, Option<String>, Pos)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let s = symbol(&items[i], "name")?;
        if s == "-" {
            let ty = items.get(i + 1).ok_or_else(|| missing(items[i].pos(), "type name after `-`"))?;
            let ty = symbol(ty, "type name")?.to_string();
            if pending.is_empty() {
                return Err(parse_err(&items[i], "name before `-`"));
            }
            out.extend(pending.drain(..).map(|(n, p)| (n, Some(ty.clone()), p)));
            i += 2;
        } else {
            pending.push((s.to_string(), items[i].pos()));
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|(n, p)| (n, None, p)));
    Ok(out)
}

fn typed_params(s: &Sexp) -> Result<Vec<(Param, Pos)>, PddlError> {
    let items = list(s, "parameter list")?;
    typed_list(items)?
        .into_iter()
        .map(|(n, ty, pos)| {
            let var = n.strip_prefix('?').ok_or_else(|| PddlError::Parse {
                pos,
                expected: "variable `?name`".into(),
                found: format!("`{n}`"),
            })?;
            Ok((Param::new(var, ty.unwrap_or_else(|| TypeHierarchy::ROOT.to_string())), pos))
        })
        .collect()
}

/// Where a formula appears; goal errors are reported as goal type errors.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Domain,
    Goal,
}

struct FormulaReader<'a> {
    sig: &'a Signature,
    objects: &'a BTreeMap<String, String>,
    ctx: Ctx,
}

impl FormulaReader<'_> {
    fn err(&self, pos: Pos, what: &'static str, name: &str) -> PddlError {
        match self.ctx {
            Ctx::Domain => PddlError::Undeclared {
                pos,
                kind: what,
                name: name.to_string(),
            },
            Ctx::Goal => PddlError::GoalType {
                pos,
                message: format!("undeclared {what} `{name}`"),
            },
        }
    }

    fn invalid(&self, pos: Pos, message: String) -> PddlError {
        match self.ctx {
            Ctx::Domain => PddlError::Invalid { pos, message },
            Ctx::Goal => PddlError::GoalType { pos, message },
        }
    }

    fn formula(&self, s: &Sexp, scope: &mut Vec<Param>) -> Result<Formula, PddlError> {
        let items = list(s, "formula")?;
        let head = match items.first() {
            None => return Ok(Formula::truth()),
            Some(h) => symbol(h, "connective or predicate")?,
        };
        match head {
            "and" => Ok(Formula::And(
                items[1..].iter().map(|x| self.formula(x, scope)).collect::<Result<_, _>>()?,
            )),
            "not" | "unknown" => {
                let inner = match &items[1..] {
                    [one] => one,
                    [] => return Err(missing(s.pos(), "atom")),
                    [_, extra, ..] => return Err(parse_err(extra, "`)`")),
                };
                let atom = self.atom(inner, scope)?;
                if head == "not" {
                    return Ok(Formula::Not(atom));
                }
                if !self.sig.is_belief(&atom.predicate) {
                    return Err(self.invalid(
                        inner.pos(),
                        format!("`unknown` needs a belief predicate, `{}` is not one", atom.predicate),
                    ));
                }
                Ok(Formula::Unknown(atom))
            }
            "forall" => {
                let (vars, body) = match &items[1..] {
                    [v, b] => (v, b),
                    _ => return Err(parse_err(s, "`(forall (?x - type) formula)`")),
                };
                let params = typed_params(vars)?;
                for (p, pos) in &params {
                    if !self.sig.types.contains(&p.ty) {
                        return Err(self.err(*pos, "type", &p.ty));
                    }
                }
                let n = params.len();
                scope.extend(params.iter().map(|(p, _)| p.clone()));
                let body = self.formula(body, scope);
                scope.truncate(scope.len() - n);
                let mut f = body?;
                for (p, _) in params.into_iter().rev() {
                    f = Formula::Forall {
                        var: p.var,
                        ty: p.ty,
                        body: Box::new(f),
                    };
                }
                Ok(f)
            }
            h if h.starts_with('¬') => Ok(Formula::Not(self.atom(s, scope)?)),
            _ => Ok(Formula::Atom(self.atom(s, scope)?)),
        }
    }

    fn atom(&self, s: &Sexp, scope: &[Param]) -> Result<Atom, PddlError> {
        let items = list(s, "atom")?;
        let head = items.first().ok_or_else(|| missing(s.pos(), "predicate name"))?;
        let raw = symbol(head, "predicate name")?;
        let name = raw.strip_prefix('¬').unwrap_or(raw);
        let info = self
            .sig
            .get(name)
            .ok_or_else(|| self.err(head.pos(), "predicate", name))?;
        let args = &items[1..];
        if args.len() != info.param_types.len() {
            return Err(self.invalid(
                s.pos(),
                format!("`{name}` expects {} arguments, found {}", info.param_types.len(), args.len()),
            ));
        }
        let mut terms = Vec::with_capacity(args.len());
        for (arg, expected) in args.iter().zip(&info.param_types) {
            let text = symbol(arg, "argument")?;
            let (term, ty) = if let Some(v) = text.strip_prefix('?') {
                let p = scope
                    .iter()
                    .rev()
                    .find(|p| p.var == v)
                    .ok_or_else(|| self.err(arg.pos(), "variable", text))?;
                (Term::Var(v.to_string()), p.ty.clone())
            } else {
                let ty = self
                    .objects
                    .get(text)
                    .ok_or_else(|| self.err(arg.pos(), "object", text))?;
                (Term::Const(text.to_string()), ty.clone())
            };
            if !self.sig.types.is_subtype(&ty, expected) {
                return Err(self.invalid(
                    arg.pos(),
                    format!("`{text}` has type `{ty}`, `{name}` expects `{expected}`"),
                ));
            }
            terms.push(term);
        }
        Ok(Atom::new(name, terms))
    }

    fn effect(&self, s: &Sexp, scope: &mut Vec<Param>) -> Result<Vec<Literal>, PddlError> {
        let items = list(s, "effect")?;
        match items.first().and_then(Sexp::symbol) {
            None if items.is_empty() => Ok(Vec::new()),
            Some("and") => {
                let mut out = Vec::new();
                for x in &items[1..] {
                    out.extend(self.effect(x, scope)?);
                }
                Ok(out)
            }
            Some("not") => match &items[1..] {
                [one] => Ok(vec![Literal::neg(self.atom(one, scope)?)]),
                _ => Err(parse_err(s, "`(not (atom))`")),
            },
            Some(h) if h.starts_with('¬') => Ok(vec![Literal::neg(self.atom(s, scope)?)]),
            _ => Ok(vec![Literal::pos(self.atom(s, scope)?)]),
        }
    }
}

fn predicate_block(s: &[Sexp], kind: PredicateKind, types: &TypeHierarchy) -> Result<Vec<PredicateSchema>, PddlError> {
    let mut out = Vec::new();
    for p in s {
        let items = list(p, "predicate declaration")?;
        let head = items.first().ok_or_else(|| missing(p.pos(), "predicate name"))?;
        let name = symbol(head, "predicate name")?.to_string();
        let rest = Sexp::List {
            items: items[1..].to_vec(),
            pos: p.pos(),
        };
        let params = typed_params(&rest)?;
        for (q, pos) in &params {
            if !types.contains(&q.ty) {
                return Err(PddlError::Undeclared {
                    pos: *pos,
                    kind: "type",
                    name: q.ty.clone(),
                });
            }
        }
        out.push(PredicateSchema {
            name,
            params: params.into_iter().map(|(q, _)| q).collect(),
            kind,
        });
    }
    Ok(out)
}

/// Parses a domain in the belief-annotated PDDL dialect.
pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let top = read_all(text)?;
    let (name, sections) = header("domain", &top)?;
    let mut domain = Domain::new(name);

    let mut actions = Vec::new();
    let mut preds: Vec<(&[Sexp], PredicateKind)> = Vec::new();
    for sec in sections {
        let items = list(sec, "section")?;
        let head = items.first().ok_or_else(|| missing(sec.pos(), "section keyword"))?;
        match symbol(head, "section keyword")? {
            ":requirements" => {
                for r in &items[1..] {
                    domain.requirements.push(symbol(r, "requirement")?.to_string());
                }
            }
            ":types" => {
                for (t, parent, pos) in typed_list(&items[1..])? {
                    if t == TypeHierarchy::ROOT {
                        return Err(PddlError::Invalid {
                            pos,
                            message: "`object` is the implicit root type".into(),
                        });
                    }
                    domain.types.declare(t, parent.filter(|p| p != TypeHierarchy::ROOT));
                }
            }
            ":predicates" => preds.push((&items[1..], PredicateKind::Physical)),
            ":belief-predicates" => preds.push((&items[1..], PredicateKind::Belief)),
            ":action" => actions.push(sec),
            _ => return Err(parse_err(head, "`:requirements`, `:types`, `:predicates`, `:belief-predicates` or `:action`")),
        }
    }
    domain.types.validate().map_err(|e| PddlError::Invalid {
        pos: sections.first().map(Sexp::pos).unwrap_or_default(),
        message: e.to_string(),
    })?;
    for (block, kind) in preds {
        for p in predicate_block(block, kind, &domain.types)? {
            if domain.predicate(&p.name).is_some() {
                return Err(PddlError::Invalid {
                    pos: block[0].pos(),
                    message: format!("predicate `{}` declared twice", p.name),
                });
            }
            domain.predicates.push(p);
        }
    }

    let sig = Signature::from_domain(&domain);
    let no_objects = BTreeMap::new();
    let reader = FormulaReader {
        sig: &sig,
        objects: &no_objects,
        ctx: Ctx::Domain,
    };
    for a in actions {
        let op = parse_action(a, &reader)?;
        if domain.operator(&op.name).is_some() {
            return Err(PddlError::Invalid {
                pos: a.pos(),
                message: format!("action `{}` declared twice", op.name),
            });
        }
        domain.operators.push(op);
    }
    Ok(domain)
}

fn parse_action(s: &Sexp, reader: &FormulaReader<'_>) -> Result<OperatorSchema, PddlError> {
    let items = list(s, "action")?;
    let name_item = items.get(1).ok_or_else(|| missing(s.pos(), "action name"))?;
    let name = symbol(name_item, "action name")?.to_string();

    let mut params: Vec<Param> = Vec::new();
    let mut precondition = None;
    let mut effects = None;
    let mut observed = None;
    let mut i = 2;
    while i < items.len() {
        let key = symbol(&items[i], "action keyword")?;
        let value = items.get(i + 1).ok_or_else(|| missing(items[i].pos(), &format!("value for `{key}`")))?;
        match key {
            ":parameters" => {
                params = Vec::new();
                for (p, pos) in typed_params(value)? {
                    if !reader.sig.types.contains(&p.ty) {
                        return Err(PddlError::Undeclared {
                            pos,
                            kind: "type",
                            name: p.ty,
                        });
                    }
                    if params.iter().any(|q| q.var == p.var) {
                        return Err(PddlError::Invalid {
                            pos,
                            message: format!("parameter `?{}` repeated", p.var),
                        });
                    }
                    params.push(p);
                }
            }
            ":precondition" => precondition = Some(value),
            ":effect" | ":effects" => effects = Some(value),
            ":observe" => observed = Some(value),
            _ => {
                return Err(parse_err(
                    &items[i],
                    "`:parameters`, `:precondition`, `:effect` or `:observe`",
                ))
            }
        }
        i += 2;
    }

    let mut scope = params.clone();
    let precondition = match precondition {
        Some(p) => reader.formula(p, &mut scope)?,
        None => Formula::truth(),
    };
    let effects = match effects {
        Some(e) => reader.effect(e, &mut scope)?,
        None => Vec::new(),
    };
    let observed = match observed {
        Some(o) => Some(reader.atom(o, &scope)?),
        None => None,
    };
    Ok(OperatorSchema {
        name,
        params,
        precondition,
        effects,
        kind: if observed.is_some() {
            OperatorKind::Observe
        } else {
            OperatorKind::Physical
        },
        observed,
    })
}

fn object_map(objects: &[ObjectRef]) -> BTreeMap<String, String> {
    objects.iter().map(|o| (o.name.clone(), o.ty.clone())).collect()
}

/// Parses a standalone goal formula against a domain and object set.
pub fn parse_goal(text: &str, domain: &Domain, objects: &[ObjectRef]) -> Result<Formula, PddlError> {
    let top = read_all(text)?;
    let s = match top.as_slice() {
        [one] => one,
        [] => {
            return Err(PddlError::Parse {
                pos: Pos { line: 1, col: 1 },
                expected: "goal formula".into(),
                found: "end of input".into(),
            })
        }
        [_, extra, ..] => return Err(parse_err(extra, "end of input")),
    };
    let sig = Signature::from_domain(domain);
    let objs = object_map(objects);
    FormulaReader {
        sig: &sig,
        objects: &objs,
        ctx: Ctx::Goal,
    }
    .formula(s, &mut Vec::new())
}

/// Parses a problem whose names resolve against `domain`.
pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem, PddlError> {
    let top = read_all(text)?;
    let (name, sections) = header("problem", &top)?;
    let sig = Signature::from_domain(domain);

    let mut domain_name = None;
    let mut objects: Vec<ObjectRef> = Vec::new();
    let mut init_items: &[Sexp] = &[];
    let mut goal = None;
    for sec in sections {
        let items = list(sec, "section")?;
        let head = items.first().ok_or_else(|| missing(sec.pos(), "section keyword"))?;
        match symbol(head, "section keyword")? {
            ":domain" => {
                let d = items.get(1).ok_or_else(|| missing(sec.pos(), "domain name"))?;
                let d = symbol(d, "domain name")?;
                if d != domain.name {
                    return Err(PddlError::Invalid {
                        pos: items[1].pos(),
                        message: format!("problem is for domain `{d}`, not `{}`", domain.name),
                    });
                }
                domain_name = Some(d.to_string());
            }
            ":objects" => {
                for (n, ty, pos) in typed_list(&items[1..])? {
                    let ty = ty.unwrap_or_else(|| TypeHierarchy::ROOT.to_string());
                    if !domain.types.contains(&ty) {
                        return Err(PddlError::Undeclared { pos, kind: "type", name: ty });
                    }
                    if objects.iter().any(|o| o.name == n) {
                        return Err(PddlError::Invalid {
                            pos,
                            message: format!("object `{n}` declared twice"),
                        });
                    }
                    objects.push(ObjectRef::new(n, ty));
                }
            }
            ":init" => init_items = &items[1..],
            ":goal" => {
                let g = items.get(1).ok_or_else(|| missing(sec.pos(), "goal formula"))?;
                goal = Some(g);
            }
            _ => return Err(parse_err(head, "`:domain`, `:objects`, `:init` or `:goal`")),
        }
    }

    let objs = object_map(&objects);
    let init_reader = FormulaReader {
        sig: &sig,
        objects: &objs,
        ctx: Ctx::Domain,
    };
    let mut init = Vec::new();
    for item in init_items {
        let f = init_reader.formula(item, &mut Vec::new())?;
        let (atom, value) = match f {
            Formula::Atom(a) => (a, TruthValue::True),
            Formula::Not(a) => (a, TruthValue::False),
            Formula::Unknown(a) => (a, TruthValue::Unknown),
            _ => return Err(parse_err(item, "ground literal")),
        };
        let ground = atom.to_ground().map_err(|e| PddlError::Invalid {
            pos: item.pos(),
            message: e.to_string(),
        })?;
        if matches!(sig.get(&ground.predicate).map(|i| &i.role), Some(PredicateRole::KnownTrue { .. } | PredicateRole::KnownFalse { .. })) {
            return Err(PddlError::Invalid {
                pos: item.pos(),
                message: format!("initialize `{}` through its belief predicate", ground.predicate),
            });
        }
        init.push((ground, value));
    }

    let goal_sexp = goal.ok_or_else(|| missing(top[0].pos(), "`(:goal ...)`"))?;
    let goal = FormulaReader {
        sig: &sig,
        objects: &objs,
        ctx: Ctx::Goal,
    }
    .formula(goal_sexp, &mut Vec::new())?;

    Ok(Problem {
        name,
        domain: domain_name.unwrap_or_else(|| domain.name.clone()),
        objects,
        init,
        goal,
    })
}

/// Ground atom text such as `(On cup1 table1)` checked against a domain.
pub fn parse_ground_atom(text: &str, domain: &Domain, objects: &[ObjectRef]) -> Result<GroundAtom, PddlError> {
    match parse_goal(text, domain, objects)? {
        Formula::Atom(a) => a.to_ground().map_err(|e| PddlError::Invalid {
            pos: Pos { line: 1, col: 1 },
            message: e.to_string(),
        }),
        _ => Err(PddlError::Parse {
            pos: Pos { line: 1, col: 1 },
            expected: "ground atom".into(),
            found: text.to_string(),
        }),
    }
}

/// Parses a formula whose variables are bound by `params`. Used for rules
/// attached to operators or object types.
pub fn parse_formula(text: &str, domain: &Domain, objects: &[ObjectRef], params: &[Param]) -> Result<Formula, PddlError> {
    let top = read_all(text)?;
    let s = match top.as_slice() {
        [one] => one,
        [] => {
            return Err(PddlError::Parse {
                pos: Pos { line: 1, col: 1 },
                expected: "formula".into(),
                found: "end of input".into(),
            })
        }
        [_, extra, ..] => return Err(parse_err(extra, "end of input")),
    };
    let sig = Signature::from_domain(domain);
    let objs = object_map(objects);
    FormulaReader {
        sig: &sig,
        objects: &objs,
        ctx: Ctx::Domain,
    }
    .formula(s, &mut params.to_vec())
}
