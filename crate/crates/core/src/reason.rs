//! Query answering: the relaxed warded chase of the TGDs followed by the
//! EGD fixpoint, evaluation of (Boolean) conjunctive queries over the
//! result, and a brute-force harmlessness check used as a test oracle.

use std::collections::BTreeSet;
use std::ops::ControlFlow;
use std::time::Instant;

use serde_json::{json, Value};

use crate::analysis::{analyze, SafetyVerdict, WardViolation, Witness};
use crate::chase::{relaxed_warded_chase, standard_chase, ChaseConfig, ChaseOutcome, ChaseStatus, Failure};
use crate::egd::{egd_fixpoint, EgdConfig, EgdFixpoint};
use crate::model::{Atom, Instance, Pattern, Substitution, Term};
use crate::syntax::{Egd, Program, Query};

/// What to do when the program is not certified harmless.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Certification {
    /// Refuse to answer.
    #[default]
    Require,
    /// Run the pipeline anyway and attach a warning.
    Force,
    /// Answer over the bounded standard chase instead.
    StandardFallback,
}

#[derive(Clone, Debug, Default)]
pub struct ReasonOptions {
    pub chase: ChaseConfig,
    pub egd: EgdConfig,
    pub certification: Certification,
    /// Drop the EGDs before reasoning.
    pub tgd_only: bool,
    /// Keep only CQ answers made of constants.
    pub constants_only: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Answered,
    Unsatisfiable,
    NotCertified { witnesses: Vec<Witness>, ward_violations: Vec<WardViolation> },
    StepLimit,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Answered => "answered",
            Status::Unsatisfiable => "unsatisfiable",
            Status::NotCertified { .. } => "not_certified",
            Status::StepLimit => "step_limit",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Stats {
    /// Facts after the TGD chase.
    pub tgd_facts: usize,
    /// Facts in the queried instance.
    pub facts: usize,
    pub tgd_steps: usize,
    pub suppressed: usize,
    pub unified_nulls: usize,
    pub chase_ms: f64,
    pub egd_ms: f64,
}

impl Stats {
    fn to_json(self) -> Value {
        json!({
            "tgd_facts": self.tgd_facts,
            "facts": self.facts,
            "tgd_steps": self.tgd_steps,
            "suppressed": self.suppressed,
            "unified_nulls": self.unified_nulls,
            "chase_ms": self.chase_ms,
            "egd_ms": self.egd_ms,
        })
    }
}

/// The instance queries are evaluated over, or the reason there is none.
#[derive(Clone, Debug)]
pub struct Materialized {
    pub status: Status,
    pub instance: Instance,
    pub failure: Option<Failure>,
    pub stats: Stats,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ReasoningResult {
    pub status: Status,
    /// Output variables; empty for a BCQ.
    pub variables: Vec<Term>,
    pub bcq_answer: Option<bool>,
    pub tuples: Option<BTreeSet<Vec<Term>>>,
    pub stats: Stats,
    pub warnings: Vec<String>,
    pub note: Option<String>,
}

impl ReasoningResult {
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "status": self.status.as_str(),
            "variables": self.variables.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            "answer": self.bcq_answer,
            "tuples": self.tuples.as_ref().map(|ts| ts.iter().map(|t| t.iter().map(|x| x.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>()),
            "stats": self.stats.to_json(),
            "warnings": self.warnings,
            "note": self.note,
        });
        if let Status::NotCertified { witnesses, ward_violations } = &self.status {
            v["witnesses"] = serde_json::to_value(witnesses).expect("witnesses serialize");
            v["ward_violations"] = serde_json::to_value(ward_violations).expect("violations serialize");
        }
        v
    }

    /// Tuples as CSV with the output variables as header. A BCQ gives a
    /// single `answer` column.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.variables.is_empty() {
            w.write_record(["answer"]).expect("in-memory write");
            if let Some(b) = self.bcq_answer {
                w.write_record([b.to_string()]).expect("in-memory write");
            }
        } else {
            w.write_record(self.variables.iter().map(|v| v.to_string())).expect("in-memory write");
            for t in self.tuples.iter().flatten() {
                w.write_record(t.iter().map(|x| x.to_string())).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// Relaxed warded chase of the TGDs, then the EGDs to fixpoint over its
/// result.
pub fn chase_h(db: &[Atom], p: &Program, config: &ChaseConfig, egd: &EgdConfig) -> ChaseOutcome {
    apply_egds(relaxed_warded_chase(db, p, config), &p.egds, egd)
}

/// Runs the EGDs to fixpoint over a saturated chase result. The graph is
/// contracted by the merges; tracks are not meaningful after that.
pub fn apply_egds(mut out: ChaseOutcome, egds: &[Egd], egd: &EgdConfig) -> ChaseOutcome {
    if !out.is_saturated() || egds.is_empty() {
        return out;
    }
    match egd_fixpoint(&out.instance, egds, egd) {
        Ok(fix) => {
            out.graph.contract(&fix.merges);
            out.stats.egd_steps += fix.h.len();
            out.instance = fix.instance;
            out.egd_assignments = fix.h;
        }
        Err(f) => {
            out.status = ChaseStatus::Failed(Failure { rule: f.rule, trigger: f.trigger, left: f.left, right: f.right });
        }
    }
    out
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

/// Runs the pipeline once so several queries can share it.
pub fn materialize(db: &[Atom], p: &Program, opts: &ReasonOptions) -> Materialized {
    let owned;
    let p = if opts.tgd_only {
        owned = p.tgds_only();
        &owned
    } else {
        p
    };
    let mut warnings = Vec::new();
    let analysis = analyze(p);
    let certified = analysis.is_warded() && analysis.safety.is_safe();
    let mut use_standard = false;
    if !certified {
        let witnesses = match &analysis.safety {
            SafetyVerdict::Unknown(w) => w.clone(),
            SafetyVerdict::Safe => Vec::new(),
        };
        match opts.certification {
            Certification::Require => {
                return Materialized {
                    status: Status::NotCertified { witnesses, ward_violations: analysis.wardedness.violations.clone() },
                    instance: Instance::new(),
                    failure: None,
                    stats: Stats::default(),
                    warnings,
                };
            }
            Certification::Force => {
                warnings.push("program is not certified harmless; answers may be unsound".to_string());
            }
            Certification::StandardFallback => {
                warnings.push("program is not certified harmless; answering over the bounded standard chase".to_string());
                use_standard = true;
            }
        }
    }

    let mut stats = Stats::default();
    let start = Instant::now();
    if use_standard {
        let out = standard_chase(db, p, &opts.chase);
        stats.chase_ms = ms(start);
        stats.tgd_steps = out.stats.tgd_steps;
        stats.tgd_facts = out.instance.len();
        stats.facts = out.instance.len();
        stats.unified_nulls = out.egd_assignments.len();
        let (status, failure) = match out.status {
            ChaseStatus::Saturated => (Status::Answered, None),
            ChaseStatus::Failed(f) => (Status::Unsatisfiable, Some(f)),
            ChaseStatus::StepLimitExceeded => (Status::StepLimit, None),
        };
        return Materialized { status, instance: out.instance, failure, stats, warnings };
    }

    let out = relaxed_warded_chase(db, p, &opts.chase);
    stats.chase_ms = ms(start);
    stats.tgd_steps = out.stats.tgd_steps;
    stats.suppressed = out.stats.suppressed;
    stats.tgd_facts = out.instance.len();
    if !out.is_saturated() {
        return Materialized { status: Status::StepLimit, instance: Instance::new(), failure: None, stats, warnings };
    }
    if p.egds.is_empty() {
        stats.facts = out.instance.len();
        return Materialized { status: Status::Answered, instance: out.instance, failure: None, stats, warnings };
    }
    let start = Instant::now();
    let fix = egd_fixpoint(&out.instance, &p.egds, &opts.egd);
    stats.egd_ms = ms(start);
    match fix {
        Ok(EgdFixpoint { h, instance, .. }) => {
            stats.unified_nulls = h.len();
            stats.facts = instance.len();
            Materialized { status: Status::Answered, instance, failure: None, stats, warnings }
        }
        Err(f) => {
            let failure = Failure { rule: f.rule, trigger: f.trigger, left: f.left, right: f.right };
            Materialized { status: Status::Unsatisfiable, instance: Instance::new(), failure: Some(failure), stats, warnings }
        }
    }
}

/// Output tuples of `q` over `inst`.
pub fn evaluate(inst: &Instance, q: &Query, constants_only: bool) -> BTreeSet<Vec<Term>> {
    let pat = Pattern::new(&q.body);
    let idx: Vec<usize> = q
        .output
        .iter()
        .map(|v| pat.vars().iter().position(|x| x == v).expect("output variable occurs in the body"))
        .collect();
    let mut out = BTreeSet::new();
    pat.for_each(inst, |b, _| {
        let t: Vec<Term> = idx.iter().map(|&i| b[i]).collect();
        if !constants_only || t.iter().all(Term::is_const) {
            out.insert(t);
        }
        ControlFlow::Continue(())
    });
    out
}

/// Answers `q` over a materialized instance.
pub fn answer(m: &Materialized, q: &Query, constants_only: bool) -> ReasoningResult {
    let mut r = ReasoningResult {
        status: m.status.clone(),
        variables: q.output.clone(),
        bcq_answer: None,
        tuples: None,
        stats: m.stats,
        warnings: m.warnings.clone(),
        note: None,
    };
    match &m.status {
        Status::Answered => {
            if q.is_boolean() {
                r.bcq_answer = Some(Pattern::new(&q.body).exists(&m.instance));
            } else {
                r.tuples = Some(evaluate(&m.instance, q, constants_only));
            }
        }
        Status::Unsatisfiable => {
            let why = m.failure.as_ref().map_or(String::new(), |f| format!(": {} would equate {} and {}", f.rule, f.left, f.right));
            if q.is_boolean() {
                r.bcq_answer = Some(true);
                r.note = Some(format!("the database and rules are unsatisfiable, so every query is entailed{why}"));
            } else {
                r.note = Some(format!("the database and rules are unsatisfiable{why}"));
            }
        }
        Status::NotCertified { .. } | Status::StepLimit => {}
    }
    r
}

pub fn answer_bcq(db: &[Atom], p: &Program, body: &[Atom], opts: &ReasonOptions) -> ReasoningResult {
    let q = Query { output: Vec::new(), body: body.to_vec() };
    answer(&materialize(db, p, opts), &q, opts.constants_only)
}

pub fn answer_cq(db: &[Atom], p: &Program, q: &Query, opts: &ReasonOptions) -> ReasoningResult {
    answer(&materialize(db, p, opts), q, opts.constants_only)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Harmlessness {
    /// Both conditions hold; `h` maps the TGD-only chase onto the full one
    /// when the latter did not fail.
    Confirmed { h: Option<Substitution> },
    /// The full chase failed but the TGD-only chase satisfies the EGDs.
    FailureWithoutViolation,
    /// No homomorphism maps the TGD-only chase onto the full chase.
    /// `unmatched` lists facts no single TGD-chase fact maps to.
    NoOntoHomomorphism { unmatched: Vec<Atom> },
    Inconclusive(String),
}

fn violates(inst: &Instance, p: &Program) -> bool {
    p.egds.iter().any(|e| {
        let pat = Pattern::new(&e.body);
        let mut hit = false;
        pat.for_each(inst, |b, _| {
            let s = pat.to_substitution(b);
            hit = s.apply_term(e.lhs) != s.apply_term(e.rhs);
            if hit {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        hit
    })
}

/// Checks both harmlessness conditions on one database using bounded
/// standard chases.
pub fn verify_harmlessness_on_instance(db: &[Atom], p: &Program, config: &ChaseConfig) -> Harmlessness {
    let full = standard_chase(db, p, config);
    let tgd = standard_chase(db, &p.tgds_only(), config);
    if !tgd.is_saturated() {
        return Harmlessness::Inconclusive("the TGD-only chase did not saturate".into());
    }
    match full.status {
        ChaseStatus::StepLimitExceeded => Harmlessness::Inconclusive("the full chase did not saturate".into()),
        ChaseStatus::Failed(_) => {
            if violates(&tgd.instance, p) {
                Harmlessness::Confirmed { h: None }
            } else {
                Harmlessness::FailureWithoutViolation
            }
        }
        ChaseStatus::Saturated => match crate::model::find_homomorphism(&tgd.instance, &full.instance, true) {
            Some(h) => Harmlessness::Confirmed { h: Some(h) },
            None => {
                let pats: Vec<Pattern> = tgd.instance.atoms().map(|a| Pattern::with_nulls_as_vars(std::slice::from_ref(a))).collect();
                let unmatched = full
                    .instance
                    .sorted_atoms()
                    .into_iter()
                    .filter(|g| {
                        let one = Instance::from_atoms([g.clone()]);
                        !pats.iter().any(|p| p.exists(&one))
                    })
                    .collect();
                Harmlessness::NoOntoHomomorphism { unmatched }
            }
        },
    }
}
