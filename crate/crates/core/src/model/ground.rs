use std::collections::BTreeMap;

use super::{ActionKind, GroundAction, ModelError, ObjectRef, OperatorKind, OperatorSchema, TypeHierarchy};

/// Grounds `schema` with the given parameter bindings.
pub fn ground(
    schema: &OperatorSchema,
    bindings: &BTreeMap<String, ObjectRef>,
    types: &TypeHierarchy,
) -> Result<GroundAction, ModelError> {
    let mut subst = BTreeMap::new();
    let mut args = Vec::with_capacity(schema.params.len());
    for p in &schema.params {
        let obj = bindings.get(&p.var).ok_or_else(|| ModelError::MissingBinding(p.var.clone()))?;
        if !types.is_subtype(&obj.ty, &p.ty) {
            return Err(ModelError::TypeMismatch {
                var: p.var.clone(),
                object: obj.name.clone(),
                expected: p.ty.clone(),
                actual: obj.ty.clone(),
            });
        }
        subst.insert(p.var.clone(), obj.name.clone());
        args.push(obj.name.clone());
    }
    instantiate(schema, args, &subst)
}

pub(crate) fn instantiate(
    schema: &OperatorSchema,
    args: Vec<String>,
    subst: &BTreeMap<String, String>,
) -> Result<GroundAction, ModelError> {
    let precondition = schema.precondition.substitute(subst);
    if let Some(v) = precondition.free_vars().into_iter().next() {
        return Err(ModelError::FreeVariable(v));
    }
    let mut add = Vec::new();
    let mut delete = Vec::new();
    for lit in &schema.effects {
        let atom = lit.atom.substitute(subst).to_ground()?;
        if lit.positive {
            add.push(atom);
        } else {
            delete.push(atom);
        }
    }
    let kind = match (&schema.kind, &schema.observed) {
        (OperatorKind::Physical, _) => ActionKind::Physical,
        (OperatorKind::Observe, Some(obs)) => ActionKind::Observe {
            base: schema.name.clone(),
            observed: obs.substitute(subst).to_ground()?,
            outcome: None,
        },
        (OperatorKind::ObserveVariant { base, positive }, Some(obs)) => ActionKind::Observe {
            base: base.clone(),
            observed: obs.substitute(subst).to_ground()?,
            outcome: Some(*positive),
        },
        (_, None) => ActionKind::Physical,
    };
    Ok(GroundAction {
        name: schema.name.clone(),
        args,
        precondition,
        add,
        delete,
        kind,
    })
}

/// All type-consistent groundings, ordered lexicographically by argument
/// names.
pub fn enumerate_groundings(
    schema: &OperatorSchema,
    objects: &[ObjectRef],
    types: &TypeHierarchy,
) -> Vec<GroundAction> {
    let mut sorted: Vec<&ObjectRef> = objects.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let domains: Vec<Vec<&ObjectRef>> = schema
        .params
        .iter()
        .map(|p| sorted.iter().copied().filter(|o| types.is_subtype(&o.ty, &p.ty)).collect())
        .collect();
    if domains.iter().any(|d| d.is_empty()) {
        return Vec::new();
    }

    let mut out = Vec::new();
    let mut idx = vec![0usize; domains.len()];
    loop {
        let subst: BTreeMap<String, String> = schema
            .params
            .iter()
            .zip(&idx)
            .zip(&domains)
            .map(|((p, &i), d)| (p.var.clone(), d[i].name.clone()))
            .collect();
        let args = idx.iter().zip(&domains).map(|(&i, d)| d[i].name.clone()).collect();
        if let Ok(a) = instantiate(schema, args, &subst) {
            out.push(a);
        }
        // odometer increment, last parameter fastest
        let mut k = domains.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < domains[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}
