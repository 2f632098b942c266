//! EGDs applied to fixpoint over a finished TGD chase through a unification
//! graph, and the Datalog encoding used to decide satisfiability.

mod encoding;
mod unify;

use std::ops::ControlFlow;

use serde_json::{json, Value};

use crate::model::{Instance, Merge, Pattern, Substitution, Term};
use crate::syntax::{Egd, RuleId};

pub use encoding::{build_sat_encoding, check_satisfiability, encoding_holds, SatEncoding};
pub use unify::{Clash, UnificationGraph};

#[derive(Clone, Debug, Default)]
pub struct EgdConfig {
    /// Re-resolve after this many new edges instead of finishing the scan.
    pub batch_threshold: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct EgdFixpoint {
    pub graph: UnificationGraph,
    /// Idempotent map from nulls to their component representatives.
    pub h: Substitution,
    /// The input rewritten by `h`; fact ids are those of the input.
    pub instance: Instance,
    pub merges: Vec<Merge>,
    /// Matching passes over the instance.
    pub passes: usize,
}

/// A trigger that would join two distinct constants.
#[derive(Clone, Debug)]
pub struct EgdFailure {
    pub rule: RuleId,
    /// The trigger, over the instance as rewritten when it was found.
    pub trigger: Substitution,
    pub left: Term,
    pub right: Term,
    pub graph: UnificationGraph,
}

impl EgdFixpoint {
    pub fn report(&self) -> Value {
        json!({ "status": "unified", "graph": self.graph.to_json(), "failure": null })
    }
}

impl EgdFailure {
    pub fn report(&self) -> Value {
        json!({
            "status": "failed",
            "graph": self.graph.to_json(),
            "failure": {
                "rule": self.rule.to_string(),
                "trigger": self.trigger.iter().map(|(k, v)| (k.to_string(), Value::String(v.to_string()))).collect::<serde_json::Map<_, _>>(),
                "left": self.left.to_string(),
                "right": self.right.to_string(),
            },
        })
    }
}

/// Applies `egds` to `m` until no trigger joins two different components.
/// Matching runs over `m` rewritten by the current components, so sides
/// that were already merged do not trigger again.
pub fn egd_fixpoint(m: &Instance, egds: &[Egd], config: &EgdConfig) -> Result<EgdFixpoint, Box<EgdFailure>> {
    let patterns: Vec<Pattern> = egds.iter().map(|e| Pattern::new(&e.body)).collect();
    let mut graph = UnificationGraph::new();
    let mut passes = 0;
    let mut current = m.clone();
    loop {
        passes += 1;
        let mut added = 0usize;
        let mut full_scan = true;
        'scan: for (ei, (e, pat)) in egds.iter().zip(&patterns).enumerate() {
            let mut hits = Vec::new();
            pat.for_each(&current, |b, _| {
                let s = pat.to_substitution(b);
                let (l, r) = (s.apply_term(e.lhs), s.apply_term(e.rhs));
                if !graph.same_component(l, r) {
                    hits.push((s, l, r));
                }
                ControlFlow::Continue(())
            });
            for (s, l, r) in hits {
                match graph.add_edge(l, r) {
                    Ok(true) => added += 1,
                    Ok(false) => {}
                    Err(Clash { left, right }) => {
                        return Err(Box::new(EgdFailure { rule: RuleId::Egd(ei), trigger: s, left, right, graph }));
                    }
                }
                if config.batch_threshold.is_some_and(|t| added >= t.max(1)) {
                    full_scan = false;
                    break 'scan;
                }
            }
        }
        if added == 0 && full_scan {
            break;
        }
        current = m.clone();
        current.rewrite(&graph.resolution());
    }
    let h = graph.resolution();
    let mut instance = m.clone();
    let merges = instance.rewrite(&h);
    Ok(EgdFixpoint { graph, h, instance, merges, passes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Atom;
    use crate::syntax::parse_program;

    fn c(s: &str) -> Term {
        Term::constant(s)
    }

    #[test]
    fn no_triggers_is_identity() {
        let p = parse_program("p(X,Y), p(X,Z) -> Y = Z. p(a,b). p(c,d).").unwrap();
        let m = Instance::from_atoms(p.facts.clone());
        let out = egd_fixpoint(&m, &p.egds, &EgdConfig::default()).unwrap();
        assert!(out.h.is_empty());
        assert_eq!(out.graph.node_count(), 0);
        assert!(out.instance.same_facts(&m));
    }

    #[test]
    fn chained_unification_needs_a_second_pass() {
        // n1 = n2 by key a; only then do q(n1, b), q(n2, n3) share a key.
        let p = parse_program(
            "p(X,Y), p(X,Z) -> Y = Z. q(X,Y), q(X,Z) -> Y = Z.\n\
             p(a,_:n1). p(a,_:n2). q(_:n1,b). q(_:n2,_:n3).",
        )
        .unwrap();
        let m = Instance::from_atoms(p.facts.clone());
        let out = egd_fixpoint(&m, &p.egds, &EgdConfig::default()).unwrap();
        assert_eq!(out.h.apply_term(Term::null(2)), Term::null(1));
        assert_eq!(out.h.apply_term(Term::null(3)), c("b"));
        assert!(out.passes >= 2);
        assert!(out.instance.contains(&Atom::new("q", vec![Term::null(1), c("b")])));
        assert_eq!(out.instance.len(), 2);
    }

    #[test]
    fn clash_reports_constants() {
        let p = parse_program("p(X,Y), p(X,Z) -> Y = Z. p(a,b). p(a,c).").unwrap();
        let m = Instance::from_atoms(p.facts.clone());
        let err = egd_fixpoint(&m, &p.egds, &EgdConfig::default()).unwrap_err();
        assert_eq!(err.rule, RuleId::Egd(0));
        assert_eq!(err.report()["status"], "failed");
    }

    #[test]
    fn batch_mode_matches_unbatched() {
        let p = parse_program(
            "p(X,Y), p(X,Z) -> Y = Z. q(X,Y), q(X,Z) -> Y = Z.\n\
             p(a,_:n1). p(a,_:n2). p(a,_:n4). q(_:n1,b). q(_:n2,_:n3). q(_:n4,_:n5).",
        )
        .unwrap();
        let m = Instance::from_atoms(p.facts.clone());
        let full = egd_fixpoint(&m, &p.egds, &EgdConfig::default()).unwrap();
        let batched = egd_fixpoint(&m, &p.egds, &EgdConfig { batch_threshold: Some(1) }).unwrap();
        assert_eq!(full.h, batched.h);
        assert!(full.instance.same_facts(&batched.instance));
        assert!(batched.passes > full.passes);
    }
}
