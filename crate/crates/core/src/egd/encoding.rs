use std::collections::{BTreeMap, BTreeSet};

use crate::chase::{relaxed_warded_chase, standard_chase, ChaseConfig};
use crate::model::{Atom, Instance, Pattern, Symbol, Term};
use crate::syntax::{Egd, Program, Tgd};

/// EGDs recast as Datalog over an `eq` relation, with the chased instance
/// (nulls read as constants) as base and `eq(X,Y), neq(X,Y)` as the check.
#[derive(Clone, Debug)]
pub struct SatEncoding {
    pub base: Instance,
    pub rules: Vec<Tgd>,
    pub check_query: Vec<Atom>,
    pub eq: Symbol,
    pub neq: Symbol,
    /// The constant standing for each null of the chased instance.
    pub null_names: BTreeMap<Term, Term>,
}

fn fresh_pred(base: &str, used: &BTreeSet<Symbol>) -> Symbol {
    let mut name = base.to_string();
    let mut k = 0;
    while used.contains(&Symbol::intern(&name)) {
        k += 1;
        name = format!("{base}_{k}");
    }
    Symbol::intern(&name)
}

fn atom(pred: Symbol, args: Vec<Term>) -> Atom {
    Atom { pred, args }
}

/// Body of `egd` with every term occurrence replaced by its own variable;
/// occurrences of the same term are tied together through `eq`, so joins
/// see equalities derived by other rules. Returns the body and the variables
/// standing for the two sides.
fn open_body(egd: &Egd, eq: Symbol, k: usize) -> (Vec<Atom>, Term, Term) {
    let mut first: BTreeMap<Term, Term> = BTreeMap::new();
    let mut body = Vec::new();
    let mut joins = Vec::new();
    let mut n = 0;
    for a in &egd.body {
        let mut args = Vec::new();
        for t in &a.args {
            let v = Term::var(&format!("_Q{k}_{n}"));
            n += 1;
            match (t, first.get(t)) {
                (Term::Var(_), None) => {
                    first.insert(*t, v);
                }
                (Term::Var(_), Some(f)) => joins.push(atom(eq, vec![*f, v])),
                _ => joins.push(atom(eq, vec![v, *t])),
            }
            args.push(v);
        }
        body.push(atom(a.pred, args));
    }
    body.extend(joins);
    (body, first[&egd.lhs], first[&egd.rhs])
}

/// Builds the encoding. `neq` holds between distinct members of `dom`; `eq`
/// is reflexive over every term of the base.
pub fn build_sat_encoding(chased: &Instance, egds: &[Egd], dom: &BTreeSet<Term>) -> SatEncoding {
    let mut used = chased.predicates();
    used.extend(egds.iter().flat_map(|e| e.body.iter().map(|a| a.pred)));
    let eq = fresh_pred("eq", &used);
    used.insert(eq);
    let neq = fresh_pred("neq", &used);

    let mut taken: BTreeSet<Term> = chased.constants();
    taken.extend(dom.iter().copied());
    let mut null_names = BTreeMap::new();
    for n in chased.nulls() {
        let mut name = format!("null_{}", n.0);
        while taken.contains(&Term::constant(&name)) {
            name.push('_');
        }
        let t = Term::constant(&name);
        taken.insert(t);
        null_names.insert(Term::Null(n), t);
    }

    let mut base = Instance::new();
    let mut terms: BTreeSet<Term> = dom.clone();
    for a in chased.atoms() {
        let args: Vec<Term> = a.args.iter().map(|t| *null_names.get(t).unwrap_or(t)).collect();
        terms.extend(args.iter().copied());
        base.insert(atom(a.pred, args));
    }
    for &t in &terms {
        base.insert(atom(eq, vec![t, t]));
    }
    for &a in dom {
        for &b in dom {
            if a != b {
                base.insert(atom(neq, vec![a, b]));
            }
        }
    }

    let (x, y, z) = (Term::var("X"), Term::var("Y"), Term::var("Z"));
    let mut rules: Vec<Tgd> = egds
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let (body, l, r) = open_body(e, eq, k);
            Tgd { body, neq: Vec::new(), head: vec![atom(eq, vec![l, r])] }
        })
        .collect();
    rules.push(Tgd { body: vec![atom(eq, vec![x, y])], neq: Vec::new(), head: vec![atom(eq, vec![y, x])] });
    rules.push(Tgd {
        body: vec![atom(eq, vec![x, y]), atom(eq, vec![y, z])],
        neq: Vec::new(),
        head: vec![atom(eq, vec![x, z])],
    });
    let check_query = vec![atom(eq, vec![x, y]), atom(neq, vec![x, y])];
    SatEncoding { base, rules, check_query, eq, neq, null_names }
}

/// Chases the encoding (plain Datalog, so it always saturates) and evaluates
/// the check query. True means a hard violation.
pub fn encoding_holds(enc: &SatEncoding) -> bool {
    let p = Program { tgds: enc.rules.clone(), ..Default::default() };
    let facts: Vec<Atom> = enc.base.atoms().cloned().collect();
    let out = standard_chase(&facts, &p, &ChaseConfig::with_limit(usize::MAX));
    debug_assert!(out.is_saturated());
    Pattern::new(&enc.check_query).exists(&out.instance)
}

/// Satisfiability through the encoding over the relaxed warded chase of the
/// TGDs. `None` when that chase stops at the step limit.
pub fn check_satisfiability(db: &[Atom], p: &Program, config: &ChaseConfig) -> Option<bool> {
    let chased = relaxed_warded_chase(db, p, config);
    if !chased.is_saturated() {
        return None;
    }
    if p.egds.is_empty() {
        return Some(true);
    }
    let dom = chased.instance.constants();
    let enc = build_sat_encoding(&chased.instance, &p.egds, &dom);
    Some(!encoding_holds(&enc))
}
