mod common;

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wardlog::analysis::{affected_positions, tainted_positions};
use wardlog::chase::{relaxed_warded_chase, standard_chase, ChaseConfig, ChaseOutcome, Step};
use wardlog::egd::{check_satisfiability, egd_fixpoint, EgdConfig};
use wardlog::model::{Atom, Term};
use wardlog::reason::{answer, chase_h, materialize, ReasonOptions, Status};
use wardlog::syntax::{parse_program, validate, Program, Query};

/// One generated case per seed; `corpus` scans forward from the seed until a
/// program passes its filters.
fn case(seed: u64) -> common::Case {
    common::corpus(1, seed).pop().unwrap()
}

fn bcqs(c: &common::Case, n: usize) -> Vec<Vec<Atom>> {
    common::random_bcqs(&mut ChaCha8Rng::seed_from_u64(c.seed ^ 0x5eed), &c.program, &c.full.instance, n)
}

fn holds(m: &wardlog::reason::Materialized, body: &[Atom]) -> Option<bool> {
    answer(m, &Query { output: Vec::new(), body: body.to_vec() }, false).bcq_answer
}

/// Every TGD step of `out` is justified: the body holds under the trigger
/// and each produced fact is the head with fresh, distinct nulls for the
/// existentials.
fn replay(out: &ChaseOutcome, p: &Program) -> Result<(), TestCaseError> {
    let final_facts = out.instance.sorted_atoms();
    for step in &out.transcript {
        let Step::Tgd { rule, trigger, produced, .. } = step else { continue };
        let wardlog::syntax::RuleId::Tgd(i) = *rule else { return Err(TestCaseError::fail("TGD step names an EGD")) };
        let tgd = &p.tgds[i];
        for a in &tgd.body {
            let g = trigger.apply_atom(a);
            prop_assert!(out.instance.contains(&g), "{rule}: body fact {g} missing");
        }
        let head: Vec<Atom> = tgd.head.iter().map(|a| trigger.apply_atom(a)).collect();
        let facts: Vec<Atom> = produced.iter().map(|(_, a)| a.clone()).collect();
        for f in &facts {
            prop_assert!(final_facts.contains(f));
        }
        if facts.is_empty() {
            continue;
        }
        // Some choice of nulls for the existentials yields all produced facts.
        let existentials = tgd.existentials();
        let body_nulls: Vec<Term> = tgd.body.iter().flat_map(|a| trigger.apply_atom(a).args).filter(Term::is_null).collect();
        let mut justified = false;
        let _ = common::naive_matches(&head, &out.instance.sorted_atoms(), false, &mut |m: &BTreeMap<Term, Term>| {
            // The recorded trigger may already carry the chosen nulls.
            let images: Vec<Term> = existentials.iter().map(|z| m.get(z).copied().unwrap_or_else(|| trigger.apply_term(*z))).collect();
            let fresh = images.iter().all(|t| t.is_null() && !body_nulls.contains(t));
            let mut sorted = images.clone();
            sorted.sort();
            sorted.dedup();
            let covers = facts.iter().all(|f| {
                head.iter().any(|h| Atom { pred: h.pred, args: h.args.iter().map(|t| *m.get(t).unwrap_or(t)).collect() } == *f)
            });
            if fresh && sorted.len() == images.len() && covers {
                justified = true;
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        prop_assert!(justified, "{rule} under {trigger} does not produce {facts:?}");
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn affected_and_tainted_grow_with_rules(seed in any::<u64>()) {
        let (p, _) = common::random_program(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assume!(validate(&p).is_empty() && !p.tgds.is_empty());
        let mut fewer_tgds = p.clone();
        fewer_tgds.tgds.pop();
        prop_assert!(affected_positions(&fewer_tgds).is_subset(&affected_positions(&p)));
        prop_assert!(tainted_positions(&fewer_tgds).tainted.is_subset(&tainted_positions(&p).tainted));
        if !p.egds.is_empty() {
            let mut fewer_egds = p.clone();
            fewer_egds.egds.pop();
            prop_assert_eq!(affected_positions(&fewer_egds), affected_positions(&p));
            prop_assert!(tainted_positions(&fewer_egds).tainted.is_subset(&tainted_positions(&p).tainted));
        }
    }

    #[test]
    fn egd_fixpoint_is_order_and_batch_independent(seed in any::<u64>(), rot in 0usize..3) {
        let c = case(seed);
        let m = &c.relaxed.instance;
        let base = egd_fixpoint(m, &c.program.egds, &EgdConfig::default());
        let mut rotated = c.program.egds.clone();
        let k = rot % rotated.len();
        rotated.rotate_left(k);
        let other = egd_fixpoint(m, &rotated, &EgdConfig::default());
        let batched = egd_fixpoint(m, &c.program.egds, &EgdConfig { batch_threshold: Some(1) });
        match base {
            Ok(fix) => {
                let other = other.map_err(|_| TestCaseError::fail("rotated EGDs fail"))?;
                let batched = batched.map_err(|_| TestCaseError::fail("batched EGDs fail"))?;
                prop_assert_eq!(&fix.h, &other.h);
                prop_assert_eq!(&fix.h, &batched.h);
                prop_assert!(fix.instance.same_facts(&batched.instance));
                prop_assert!(fix.h.is_idempotent() && fix.h.fixes_constants());
                prop_assert!(!common::naive_violates(&c.program, &fix.instance));
                // Idempotent: nothing left to unify.
                let again = egd_fixpoint(&fix.instance, &c.program.egds, &EgdConfig::default())
                    .map_err(|_| TestCaseError::fail("second fixpoint fails"))?;
                prop_assert!(again.h.is_empty());
                prop_assert!(again.instance.same_facts(&fix.instance));
            }
            Err(_) => {
                prop_assert!(other.is_err());
                prop_assert!(batched.is_err());
            }
        }
    }

    #[test]
    fn chase_steps_replay(seed in any::<u64>()) {
        let c = case(seed);
        let tgds = c.program.tgds_only();
        let cfg = ChaseConfig { transcript: true, ..ChaseConfig::with_limit(common::ORACLE_LIMIT) };
        let relaxed = relaxed_warded_chase(&c.db, &tgds, &cfg);
        replay(&relaxed, &tgds)?;
        let standard = standard_chase(&c.db, &tgds, &cfg);
        replay(&standard, &tgds)?;
        // Forest parents exist and precede their children.
        for id in relaxed.instance.iter().map(|(id, _)| id) {
            if let Some(parent) = relaxed.graph.forest_parent(id) {
                prop_assert!(relaxed.instance.get(parent).is_some());
                prop_assert!(parent < id);
            }
        }
    }

    #[test]
    fn unsatisfiable_inputs_entail_every_bcq(seed in any::<u64>()) {
        let c = case(seed);
        let m = materialize(&c.db, &c.program, &ReasonOptions::default());
        if m.status == Status::Unsatisfiable {
            for q in bcqs(&c, 10) {
                prop_assert_eq!(holds(&m, &q), Some(true));
            }
            // Unrelated atoms too.
            let q = vec![Atom::new("unrelated", vec![Term::var("X")])];
            prop_assert_eq!(holds(&m, &q), Some(true));
        }
    }

    #[test]
    fn egds_only_add_consequences(seed in any::<u64>()) {
        let c = case(seed);
        let with = materialize(&c.db, &c.program, &ReasonOptions::default());
        let without = materialize(&c.db, &c.program, &ReasonOptions { tgd_only: true, ..Default::default() });
        for q in bcqs(&c, 10) {
            if holds(&without, &q) == Some(true) {
                prop_assert_eq!(holds(&with, &q), Some(true), "{:?}", q);
            }
        }
    }

    #[test]
    fn satisfiability_routes_agree(seed in any::<u64>()) {
        let c = case(seed);
        let cfg = ChaseConfig::default();
        let direct = chase_h(&c.db, &c.program, &cfg, &EgdConfig::default());
        prop_assert_eq!(check_satisfiability(&c.db, &c.program, &cfg), Some(!direct.is_failed()));
        prop_assert_eq!(direct.is_failed(), c.full.is_failed());
    }
}

#[test]
fn contradiction_entails_arbitrary_queries() {
    let p = parse_program("k(a, b). k(a, c). k(X, Y), k(X, Z) -> Y = Z. e(X) -> f(X, W).").unwrap();
    let m = materialize(&p.facts, &p, &ReasonOptions::default());
    assert_eq!(m.status, Status::Unsatisfiable);
    for body in ["f(a, a)", "e(Q)", "k(c, c), f(X, Y)"] {
        let q = parse_program(&format!("? {body}.")).unwrap();
        assert_eq!(holds(&m, &q.queries[0].body), Some(true), "{body}");
    }
}
