//! Seeded generator of small warded programs with safely tainted EGDs, and
//! of BCQs over them.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wardlog::analysis::analyze;
use wardlog::chase::{relaxed_warded_chase, standard_chase, ChaseConfig, ChaseOutcome};
use wardlog::model::{Atom, Instance, Term};
use wardlog::syntax::{validate, Egd, Program, Tgd};

pub const MAX_PREDS: usize = 4;
pub const MAX_ARITY: usize = 3;
pub const MAX_TGDS: usize = 8;
pub const MAX_EGDS: usize = 3;
pub const MAX_FACTS: usize = 8;
pub const MAX_DOM: usize = 5;
pub const ORACLE_LIMIT: usize = 3000;

pub struct Case {
    pub seed: u64,
    pub program: Program,
    pub db: Vec<Atom>,
    /// Standard chase with the EGDs.
    pub full: ChaseOutcome,
    /// Standard chase of the TGDs alone.
    pub tgd: ChaseOutcome,
    /// Relaxed warded chase of the TGDs, default step budget.
    pub relaxed: ChaseOutcome,
}

struct Schema {
    preds: Vec<(String, usize)>,
    consts: Vec<Term>,
}

fn var(name: &str, i: usize) -> Term {
    Term::var(&format!("{name}{i}"))
}

fn random_atom(rng: &mut ChaCha8Rng, s: &Schema, pool: usize, const_p: f64) -> Atom {
    let (p, n) = s.preds.choose(rng).unwrap();
    let args = (0..*n)
        .map(|_| {
            if rng.gen_bool(const_p) && !s.consts.is_empty() {
                *s.consts.choose(rng).unwrap()
            } else {
                var("X", rng.gen_range(0..pool))
            }
        })
        .collect();
    Atom::new(p, args)
}

fn random_tgd(rng: &mut ChaCha8Rng, s: &Schema) -> Tgd {
    let pool = rng.gen_range(1..=4);
    let body: Vec<Atom> = (0..rng.gen_range(1..=2)).map(|_| random_atom(rng, s, pool, 0.1)).collect();
    let frontier: Vec<Term> = body.iter().flat_map(|a| a.variables()).collect::<BTreeSet<_>>().into_iter().collect();
    let exist = rng.gen_range(0..=2);
    let head = (0..rng.gen_range(1..=2))
        .map(|_| {
            let (p, n) = s.preds.choose(rng).unwrap();
            let args = (0..*n)
                .map(|_| {
                    let r: f64 = rng.gen();
                    if r < 0.3 && exist > 0 {
                        var("Z", rng.gen_range(0..exist))
                    } else if r < 0.37 && !s.consts.is_empty() {
                        *s.consts.choose(rng).unwrap()
                    } else if !frontier.is_empty() {
                        *frontier.choose(rng).unwrap()
                    } else {
                        var("Z", 0)
                    }
                })
                .collect();
            Atom::new(p, args)
        })
        .collect();
    Tgd { body, neq: Vec::new(), head }
}

fn random_egd(rng: &mut ChaCha8Rng, s: &Schema) -> Option<Egd> {
    let keyed: Vec<&(String, usize)> = s.preds.iter().filter(|(_, n)| *n >= 2).collect();
    if !keyed.is_empty() && rng.gen_bool(0.7) {
        // A key: same predicate twice, agreeing on a prefix.
        let (p, n) = keyed.choose(rng).unwrap();
        let key = rng.gen_range(1..*n);
        let a: Vec<Term> = (0..*n).map(|i| var("X", i)).collect();
        let b: Vec<Term> = (0..*n).map(|i| if i < key { var("X", i) } else { var("Y", i) }).collect();
        let side = rng.gen_range(key..*n);
        return Some(Egd { body: vec![Atom::new(p, a), Atom::new(p, b)], lhs: var("X", side), rhs: var("Y", side) });
    }
    let pool = rng.gen_range(2..=4);
    let body: Vec<Atom> = (0..rng.gen_range(1..=2)).map(|_| random_atom(rng, s, pool, 0.0)).collect();
    let vars: Vec<Term> = body.iter().flat_map(|a| a.variables()).collect::<BTreeSet<_>>().into_iter().collect();
    if vars.len() < 2 {
        return None;
    }
    let mut pick = vars.choose_multiple(rng, 2);
    let (l, r) = (*pick.next().unwrap(), *pick.next().unwrap());
    Some(Egd { body, lhs: l, rhs: r })
}

/// One unfiltered program and database.
pub fn random_program(rng: &mut ChaCha8Rng) -> (Program, Vec<Atom>) {
    let names = ["p", "q", "r", "s"];
    let npreds = rng.gen_range(2..=MAX_PREDS);
    let preds: Vec<(String, usize)> = names[..npreds].iter().map(|n| (n.to_string(), rng.gen_range(1..=MAX_ARITY))).collect();
    let all_consts: Vec<Term> = ["a", "b", "c", "d", "e"][..rng.gen_range(1..=MAX_DOM)].iter().map(|c| Term::constant(c)).collect();
    let db_schema = Schema { preds: preds.clone(), consts: all_consts };
    let db: Vec<Atom> = (0..rng.gen_range(1..=MAX_FACTS))
        .map(|_| {
            let (p, n) = db_schema.preds.choose(rng).unwrap();
            Atom::new(p, (0..*n).map(|_| *db_schema.consts.choose(rng).unwrap()).collect())
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    // Rule constants come from the database so dom(D) bounds every constant.
    let used: Vec<Term> = db.iter().flat_map(|a| a.args.iter().copied()).collect::<BTreeSet<_>>().into_iter().collect();
    let s = Schema { preds, consts: used };
    let tgds = (0..rng.gen_range(1..=MAX_TGDS)).map(|_| random_tgd(rng, &s)).collect();
    let egds = (0..rng.gen_range(0..=MAX_EGDS)).filter_map(|_| random_egd(rng, &s)).collect();
    let p = Program { tgds, egds, facts: db.clone(), queries: Vec::new() };
    (p, db)
}

/// Programs that are well formed, warded, safely tainted, and whose bounded
/// standard chases saturate (or fail) with and without the EGDs.
pub fn corpus(n: usize, seed: u64) -> Vec<Case> {
    let mut out = Vec::new();
    let mut k = 0u64;
    let cfg = ChaseConfig::with_limit(ORACLE_LIMIT);
    while out.len() < n {
        let case_seed = seed.wrapping_mul(1_000_003).wrapping_add(k);
        k += 1;
        assert!(k < 200_000, "generator is too selective");
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
        let (program, db) = random_program(&mut rng);
        if program.egds.is_empty() || !validate(&program).is_empty() {
            continue;
        }
        let a = analyze(&program);
        if !a.is_warded() || !a.safety.is_safe() {
            continue;
        }
        // Some EGD must reach a position that can hold a null.
        if a.taint.seeds.is_empty() {
            continue;
        }
        let tgd = standard_chase(&db, &program.tgds_only(), &cfg);
        if !tgd.is_saturated() {
            continue;
        }
        let full = standard_chase(&db, &program, &cfg);
        if !(full.is_saturated() || full.is_failed()) {
            continue;
        }
        let relaxed = relaxed_warded_chase(&db, &program, &ChaseConfig::default());
        out.push(Case { seed: case_seed, program, db, full, tgd, relaxed });
    }
    out
}

fn generalize(rng: &mut ChaCha8Rng, atoms: &[Atom]) -> Vec<Atom> {
    let mut names: BTreeMap<Term, Term> = BTreeMap::new();
    atoms
        .iter()
        .map(|a| {
            let args = a
                .args
                .iter()
                .map(|t| {
                    if t.is_null() || rng.gen_bool(0.25) {
                        let next = names.len();
                        *names.entry(*t).or_insert_with(|| var("V", next))
                    } else {
                        *t
                    }
                })
                .collect();
            Atom { pred: a.pred, args }
        })
        .collect()
}

/// Atomic and two-atom BCQs: generalizations of facts of `inst` (mostly
/// true) and random atoms (often false).
pub fn random_bcqs(rng: &mut ChaCha8Rng, p: &Program, inst: &Instance, n: usize) -> Vec<Vec<Atom>> {
    let facts: Vec<Atom> = inst.sorted_atoms();
    let preds: Vec<(String, usize)> = p
        .all_atoms()
        .map(|a| (a.pred.as_str().to_string(), a.arity()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let consts: Vec<Term> = p.facts.iter().flat_map(|a| a.args.iter().copied()).collect::<BTreeSet<_>>().into_iter().collect();
    let s = Schema { preds, consts };
    let mut out = Vec::new();
    while out.len() < n {
        let two = rng.gen_bool(0.5);
        let q = if !facts.is_empty() && rng.gen_bool(0.6) {
            let f = facts.choose(rng).unwrap().clone();
            if two {
                let shared: Vec<&Atom> =
                    facts.iter().filter(|g| **g != f && g.args.iter().any(|t| f.args.contains(t))).collect();
                match shared.choose(rng) {
                    Some(g) => generalize(rng, &[f.clone(), (*g).clone()]),
                    None => generalize(rng, &[f]),
                }
            } else {
                generalize(rng, &[f])
            }
        } else {
            let k = if two { 2 } else { 1 };
            (0..k).map(|_| random_atom(rng, &s, 2, 0.5)).collect()
        };
        out.push(q);
    }
    out
}

/// Nested-loop enumeration of the matches of `body` in `facts`. Variables
/// (and nulls, when `nulls_free`) bind; everything else must be equal.
pub fn naive_matches<F>(body: &[Atom], facts: &[Atom], nulls_free: bool, f: &mut F) -> ControlFlow<()>
where
    F: FnMut(&BTreeMap<Term, Term>) -> ControlFlow<()>,
{
    fn go<F>(i: usize, body: &[Atom], facts: &[Atom], free: bool, m: &mut BTreeMap<Term, Term>, f: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&BTreeMap<Term, Term>) -> ControlFlow<()>,
    {
        if i == body.len() {
            return f(m);
        }
        let a = &body[i];
        for g in facts.iter().filter(|g| g.pred == a.pred && g.arity() == a.arity()) {
            let mut added = Vec::new();
            let mut ok = true;
            for (t, u) in a.args.iter().zip(&g.args) {
                let binds = matches!(t, Term::Var(_)) || (free && t.is_null());
                if !binds {
                    if t != u {
                        ok = false;
                        break;
                    }
                    continue;
                }
                match m.get(t) {
                    Some(v) if v != u => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        m.insert(*t, *u);
                        added.push(*t);
                    }
                }
            }
            let r = if ok { go(i + 1, body, facts, free, m, f) } else { ControlFlow::Continue(()) };
            for t in added {
                m.remove(&t);
            }
            r?;
        }
        ControlFlow::Continue(())
    }
    go(0, body, facts, nulls_free, &mut BTreeMap::new(), f)
}

pub fn naive_holds(body: &[Atom], inst: &Instance) -> bool {
    let facts = inst.sorted_atoms();
    naive_matches(body, &facts, false, &mut |_| ControlFlow::Break(())).is_break()
}

/// Some EGD trigger in `inst` has two different sides.
pub fn naive_violates(p: &Program, inst: &Instance) -> bool {
    let facts = inst.sorted_atoms();
    p.egds.iter().any(|e| {
        naive_matches(&e.body, &facts, false, &mut |m| {
            if m[&e.lhs] != m[&e.rhs] {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
        .is_break()
    })
}

/// A homomorphism from `src` onto `dst` (nulls map anywhere, constants to
/// themselves, every fact of `dst` is hit), by exhaustive backtracking.
pub fn brute_onto_homomorphism(src: &Instance, dst: &Instance) -> Option<BTreeMap<Term, Term>> {
    let body = src.sorted_atoms();
    let target = dst.sorted_atoms();
    let want: BTreeSet<&Atom> = target.iter().collect();
    let mut found = None;
    let _ = naive_matches(&body, &target, true, &mut |m| {
        let image: BTreeSet<Atom> =
            body.iter().map(|a| Atom { pred: a.pred, args: a.args.iter().map(|t| *m.get(t).unwrap_or(t)).collect() }).collect();
        if image.iter().collect::<BTreeSet<_>>() == want {
            found = Some(m.clone());
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    found
}
