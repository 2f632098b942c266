use std::collections::{HashMap, HashSet};
use std::ops::ControlFlow;

use super::graph::ChaseGraph;
use super::{ChaseConfig, ChaseOutcome, ChaseStats, ChaseStatus, Failure, Step, Suppressed, Variant};
use crate::analysis::check_warded;
use crate::model::{Atom, FactId, Instance, NullGen, Pattern, Substitution, Term};
use crate::syntax::{Egd, Program, RuleId, Tgd};

/// Result of a single EGD step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EgdStep {
    NoOp,
    Assigned { from: Term, to: Term },
    Failed { left: Term, right: Term },
}

/// Applies `tgd` under `trigger`, which must map the body into `inst`.
/// Inserts the head facts not already present and returns their ids. The
/// new facts are roots of the warded forest unless the rule is linear.
pub fn tgd_step(
    inst: &mut Instance,
    graph: &mut ChaseGraph,
    nulls: &mut NullGen,
    rule: usize,
    tgd: &Tgd,
    trigger: &Substitution,
) -> Vec<FactId> {
    let facts: Vec<FactId> = tgd
        .body
        .iter()
        .map(|a| inst.id_of(&trigger.apply_atom(a)).expect("trigger must map the body into the instance"))
        .collect();
    let mut h = trigger.clone();
    for z in tgd.existentials() {
        h.insert(z, nulls.fresh_null());
    }
    let parent = if tgd.is_linear() { Some(facts[0]) } else { None };
    let mut out = Vec::new();
    for a in &tgd.head {
        let (id, new) = inst.insert(h.apply_atom(a));
        if new {
            graph.add_node(id);
            graph.add_derivation(&facts, id, RuleId::Tgd(rule), &h, parent);
            out.push(id);
        }
    }
    out
}

/// Applies `egd` under `trigger`. A null side is rewritten to the other
/// side everywhere; between two nulls the younger one goes.
pub fn egd_step(
    inst: &mut Instance,
    graph: &mut ChaseGraph,
    assignments: &mut Substitution,
    egd: &Egd,
    trigger: &Substitution,
) -> EgdStep {
    let (a, b) = (trigger.apply_term(egd.lhs), trigger.apply_term(egd.rhs));
    let (from, to) = match (a, b) {
        _ if a == b => return EgdStep::NoOp,
        (Term::Const(_), Term::Const(_)) => return EgdStep::Failed { left: a, right: b },
        (Term::Null(_), Term::Const(_)) => (a, b),
        (Term::Const(_), Term::Null(_)) => (b, a),
        (Term::Null(x), Term::Null(y)) => {
            if x > y {
                (a, b)
            } else {
                (b, a)
            }
        }
        _ => panic!("EGD trigger left a variable unbound: {a} = {b}"),
    };
    assignments.assign_back_substituting(from, to);
    let merges = inst.rewrite(&Substitution::from_pairs([(from, to)]));
    graph.contract(&merges);
    EgdStep::Assigned { from, to }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Gate {
    None,
    Isomorphism,
    Track,
}

struct Rule<'a> {
    tgd: &'a Tgd,
    pattern: Pattern,
    existentials: Vec<Term>,
    /// Body index of the forest parent.
    parent: Option<usize>,
}

struct Run<'a> {
    rules: Vec<Rule<'a>>,
    egds: Vec<(&'a Egd, Pattern)>,
    gate: Gate,
    config: &'a ChaseConfig,
    inst: Instance,
    graph: ChaseGraph,
    nulls: NullGen,
    assignments: Substitution,
    seen: HashSet<(usize, Vec<Term>)>,
    /// Facts per track, for the relaxed chase.
    by_track: HashMap<FactId, Instance>,
    stats: ChaseStats,
    transcript: Vec<Step>,
}

impl<'a> Run<'a> {
    fn new(db: &[Atom], tgds: &'a [Tgd], egds: &'a [Egd], wards: &[Option<usize>], gate: Gate, config: &'a ChaseConfig) -> Self {
        let rules = tgds
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let parent = if t.is_linear() { Some(0) } else { wards.get(i).copied().flatten() };
                Rule { tgd: t, pattern: Pattern::new(&t.body), existentials: t.existentials(), parent }
            })
            .collect();
        let egds = egds.iter().map(|e| (e, Pattern::new(&e.body))).collect();
        let inst = Instance::from_atoms(db.iter().cloned());
        let mut graph = ChaseGraph::new();
        let mut by_track: HashMap<FactId, Instance> = HashMap::new();
        for (id, a) in inst.iter() {
            graph.add_node(id);
            if gate == Gate::Track {
                by_track.entry(id).or_default().insert(a.clone());
            }
        }
        let nulls = NullGen::starting_after(inst.max_null());
        Run {
            rules,
            egds,
            gate,
            config,
            inst,
            graph,
            nulls,
            assignments: Substitution::new(),
            seen: HashSet::new(),
            by_track,
            stats: ChaseStats::default(),
            transcript: Vec::new(),
        }
    }

    fn run(mut self) -> ChaseOutcome {
        let status = self.rounds();
        ChaseOutcome {
            status,
            instance: self.inst,
            graph: self.graph,
            egd_assignments: self.assignments,
            stats: self.stats,
            transcript: self.transcript,
        }
    }

    fn rounds(&mut self) -> ChaseStatus {
        if let Err(f) = self.egd_fixpoint() {
            return ChaseStatus::Failed(f);
        }
        loop {
            let triggers = self.collect_triggers();
            if triggers.is_empty() {
                return ChaseStatus::Saturated;
            }
            self.stats.rounds += 1;
            for (ri, binding, facts) in triggers {
                if !self.seen.insert((ri, binding.clone())) {
                    continue;
                }
                if self.config.restricted && self.head_satisfied(ri, &binding) {
                    continue;
                }
                if self.stats.tgd_steps >= self.config.max_steps {
                    return ChaseStatus::StepLimitExceeded;
                }
                self.fire(ri, &binding, &facts);
            }
            if let Err(f) = self.egd_fixpoint() {
                return ChaseStatus::Failed(f);
            }
        }
    }

    fn collect_triggers(&self) -> Vec<(usize, Vec<Term>, Vec<FactId>)> {
        let mut out = Vec::new();
        for (ri, r) in self.rules.iter().enumerate() {
            r.pattern.for_each(&self.inst, |binding, facts| {
                if neq_holds(r, binding) && !self.seen.contains(&(ri, binding.to_vec())) {
                    out.push((ri, binding.to_vec(), facts.to_vec()));
                }
                ControlFlow::Continue(())
            });
        }
        out
    }

    fn head_satisfied(&self, ri: usize, binding: &[Term]) -> bool {
        let r = &self.rules[ri];
        let h = r.pattern.to_substitution(binding);
        let head: Vec<Atom> = r.tgd.head.iter().map(|a| h.apply_atom(a)).collect();
        Pattern::new(&head).exists(&self.inst)
    }

    fn fire(&mut self, ri: usize, binding: &[Term], facts: &[FactId]) {
        self.stats.tgd_steps += 1;
        let r = &self.rules[ri];
        let mut h = r.pattern.to_substitution(binding);
        for z in &r.existentials {
            h.insert(*z, self.nulls.fresh_null());
        }
        let parent = r.parent.map(|i| facts[i]);
        let track = parent.map(|p| self.graph.compute_track(p));
        let fresh: Vec<Atom> = r.tgd.head.iter().map(|a| h.apply_atom(a)).filter(|a| !self.inst.contains(a)).collect();
        let mut produced = Vec::new();
        let mut suppressed = Vec::new();
        // The relaxed chase withholds a trigger's new facts together, and only
        // when one renaming of their nulls maps all of them into the track;
        // withholding a single fact would cut the nulls it shares with its
        // siblings. The warded chase judges each fact on its own.
        let witnesses: Vec<Option<Atom>> = match self.gate {
            Gate::None => vec![None; fresh.len()],
            Gate::Isomorphism => fresh
                .iter()
                .map(|a| isomorphic_copy(std::slice::from_ref(a), &self.inst).map(|mut w| w.remove(0)))
                .collect(),
            Gate::Track => match track.and_then(|t| isomorphic_copy(&fresh, self.by_track.get(&t)?)) {
                Some(ws) => ws.into_iter().map(Some).collect(),
                None => vec![None; fresh.len()],
            },
        };
        for (atom, witness) in fresh.into_iter().zip(witnesses) {
            if let Some(w) = witness {
                let w = self.inst.id_of(&w).expect("witnesses are in the instance");
                debug_assert!(self.gate != Gate::Track || Some(self.graph.compute_track(w)) == track);
                self.stats.suppressed += 1;
                suppressed.push(Suppressed { atom, witness: w, track: if self.gate == Gate::Track { track } else { None } });
                continue;
            }
            let (id, new) = self.inst.insert(atom.clone());
            if !new {
                continue;
            }
            self.graph.add_node(id);
            self.graph.add_derivation(facts, id, RuleId::Tgd(ri), &h, parent);
            if self.gate == Gate::Track {
                self.by_track.entry(track.unwrap_or(id)).or_default().insert(atom.clone());
            }
            produced.push((id, atom));
        }
        if self.config.transcript {
            self.transcript.push(Step::Tgd { rule: RuleId::Tgd(ri), trigger: h, produced, suppressed });
        }
    }

    /// EGD steps until no trigger equates two different terms.
    fn egd_fixpoint(&mut self) -> Result<(), Failure> {
        if self.egds.is_empty() {
            return Ok(());
        }
        let before = self.assignments.clone();
        loop {
            let mut triggers = Vec::new();
            for (ei, (e, pat)) in self.egds.iter().enumerate() {
                pat.for_each(&self.inst, |b, _| {
                    let s = pat.to_substitution(b);
                    if s.apply_term(e.lhs) != s.apply_term(e.rhs) {
                        triggers.push((ei, s));
                    }
                    ControlFlow::Continue(())
                });
            }
            if triggers.is_empty() {
                break;
            }
            // Triggers were matched before this pass's rewrites; pushing them
            // through the assignments keeps them valid.
            for (ei, s) in triggers {
                let s = compose(&s, &self.assignments);
                let egd = self.egds[ei].0;
                match egd_step(&mut self.inst, &mut self.graph, &mut self.assignments, egd, &s) {
                    EgdStep::NoOp => {}
                    EgdStep::Assigned { from, to } => {
                        self.stats.egd_steps += 1;
                        if self.config.transcript {
                            self.transcript.push(Step::Egd { rule: RuleId::Egd(ei), trigger: s, from, to });
                        }
                    }
                    EgdStep::Failed { left, right } => {
                        let f = Failure { rule: RuleId::Egd(ei), trigger: s, left, right };
                        if self.config.transcript {
                            self.transcript.push(Step::Failure(f.clone()));
                        }
                        return Err(f);
                    }
                }
            }
        }
        if self.assignments != before {
            let h = &self.assignments;
            self.seen = self
                .seen
                .drain()
                .map(|(ri, b)| (ri, b.into_iter().map(|t| h.apply_term(t)).collect()))
                .collect();
        }
        Ok(())
    }
}

fn compose(s: &Substitution, then: &Substitution) -> Substitution {
    Substitution::from_pairs(s.iter().map(|(k, v)| (k, then.apply_term(v))))
}

/// Facts of `pool` that a bijective renaming of nulls maps `atoms` onto,
/// in order.
fn isomorphic_copy(atoms: &[Atom], pool: &Instance) -> Option<Vec<Atom>> {
    if atoms.is_empty() {
        return None;
    }
    let pat = Pattern::with_nulls_as_vars(atoms);
    let mut found = None;
    pat.for_each(pool, |b, facts| {
        let mut seen = HashSet::new();
        if b.iter().all(|t| t.is_null() && seen.insert(*t)) {
            found = Some(facts.iter().map(|f| pool.get(*f).expect("matched fact").clone()).collect());
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    });
    found
}

fn neq_holds(r: &Rule<'_>, binding: &[Term]) -> bool {
    if r.tgd.neq.is_empty() {
        return true;
    }
    let vars = r.pattern.vars();
    let resolve = |t: Term| match vars.iter().position(|v| *v == t) {
        Some(i) => binding[i],
        None => t,
    };
    r.tgd.neq.iter().all(|(a, b)| {
        let (a, b) = (resolve(*a), resolve(*b));
        a.is_const() && b.is_const() && a != b
    })
}

/// Runs the chosen variant. The warded variants ignore the program's EGDs.
pub fn chase(db: &[Atom], p: &Program, variant: Variant, config: &ChaseConfig) -> ChaseOutcome {
    match variant {
        Variant::Standard => standard_chase(db, p, config),
        Variant::Warded => warded_chase(db, p, config),
        Variant::Relaxed => relaxed_warded_chase(db, p, config),
    }
}

/// Breadth-first rounds of TGD steps, each followed by EGD steps to
/// fixpoint. May stop at the step limit.
pub fn standard_chase(db: &[Atom], p: &Program, config: &ChaseConfig) -> ChaseOutcome {
    let wards = check_warded(p).wards;
    Run::new(db, &p.tgds, &p.egds, &wards, Gate::None, config).run()
}

/// TGD-only chase that withholds any new fact isomorphic to an existing one.
pub fn warded_chase(db: &[Atom], p: &Program, config: &ChaseConfig) -> ChaseOutcome {
    let plain = ChaseConfig { restricted: false, ..config.clone() };
    let wards = check_warded(p).wards;
    Run::new(db, &p.tgds, &[], &wards, Gate::Isomorphism, &plain).run()
}

/// TGD-only chase that withholds a new fact when an isomorphic fact with the
/// same track exists.
pub fn relaxed_warded_chase(db: &[Atom], p: &Program, config: &ChaseConfig) -> ChaseOutcome {
    let plain = ChaseConfig { restricted: false, ..config.clone() };
    let wards = check_warded(p).wards;
    Run::new(db, &p.tgds, &[], &wards, Gate::Track, &plain).run()
}
