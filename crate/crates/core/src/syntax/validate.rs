use std::collections::BTreeMap;

use serde::Serialize;

use super::{Program, RuleId};
use crate::model::Symbol;

/// A well-formedness problem. `rule` is absent for program-wide issues.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub rule: Option<RuleId>,
    pub message: String,
}

fn diag(rule: Option<RuleId>, message: String) -> Diagnostic {
    Diagnostic { rule, message }
}

/// Checks arity consistency and rule shape. An empty result means the
/// program is well formed.
pub fn validate(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let mut arities: BTreeMap<Symbol, Vec<usize>> = BTreeMap::new();
    for a in p.all_atoms() {
        let seen = arities.entry(a.pred).or_default();
        if !seen.contains(&a.arity()) {
            seen.push(a.arity());
        }
    }
    for (pred, found) in &arities {
        if found.len() > 1 {
            let list: Vec<String> = found.iter().map(|n| format!("{pred}/{n}")).collect();
            out.push(diag(None, format!("predicate used with several arities: {}", list.join(", "))));
        }
        if found.contains(&0) {
            out.push(diag(None, format!("predicate {pred} has arity 0")));
        }
    }

    for f in &p.facts {
        if !f.is_ground() {
            out.push(diag(None, format!("fact {f} contains a variable")));
        }
    }

    for (i, t) in p.tgds.iter().enumerate() {
        let id = Some(RuleId::Tgd(i));
        if t.body.is_empty() || t.head.is_empty() {
            out.push(diag(id, "TGD needs a nonempty body and head".into()));
        }
        if t.body.iter().chain(&t.head).any(|a| a.has_nulls()) {
            out.push(diag(id, "labelled nulls may only appear in facts".into()));
        }
        let bound = t.body_vars();
        for (a, b) in &t.neq {
            for side in [a, b] {
                if side.is_var() && !bound.contains(side) {
                    out.push(diag(id, format!("{side} in '!=' is not bound by the body")));
                }
            }
        }
    }

    for (i, e) in p.egds.iter().enumerate() {
        let id = Some(RuleId::Egd(i));
        if e.body.iter().any(|a| a.has_nulls()) {
            out.push(diag(id, "labelled nulls may only appear in facts".into()));
        }
        if !e.lhs.is_var() || !e.rhs.is_var() || e.lhs == e.rhs {
            out.push(diag(id, format!("EGD must equate two distinct variables, found {} = {}", e.lhs, e.rhs)));
        }
        let bound = e.body_vars();
        for side in [e.lhs, e.rhs] {
            if side.is_var() && !bound.contains(&side) {
                out.push(diag(id, format!("{side} does not occur in the EGD body")));
            }
        }
    }

    for q in &p.queries {
        let bound: Vec<_> = q.body.iter().flat_map(|a| a.variables()).collect();
        for v in &q.output {
            if !bound.contains(v) {
                out.push(diag(None, format!("query output {v} does not occur in the query body")));
            }
        }
    }
    out
}
