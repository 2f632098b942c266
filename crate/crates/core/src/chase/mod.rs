//! The chase engines: a bounded standard chase that interleaves TGD and EGD
//! steps, the warded chase pruned by fact isomorphism, and the relaxed
//! warded chase pruned by isomorphism within a warded-forest track.

mod dot;
mod engine;
mod graph;

use std::io::{self, Write};

use serde_json::{json, Value};

use crate::model::{Atom, FactId, Instance, Substitution, Term};
use crate::syntax::RuleId;

pub use dot::{export_dot, DotOptions};
pub use engine::{
    chase, egd_step, relaxed_warded_chase, standard_chase, tgd_step, warded_chase, EgdStep,
};
pub use graph::{ChaseGraph, Edge};

/// Which chase to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Standard,
    Warded,
    Relaxed,
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Variant::Standard),
            "warded" => Ok(Variant::Warded),
            "relaxed" => Ok(Variant::Relaxed),
            other => Err(format!("unknown chase variant '{other}' (standard, warded, relaxed)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ChaseConfig {
    /// Maximum number of TGD steps before giving up.
    pub max_steps: usize,
    /// Skip TGD triggers whose head is already satisfied (standard chase only).
    pub restricted: bool,
    /// Record every step in [`ChaseOutcome::transcript`].
    pub transcript: bool,
}

impl Default for ChaseConfig {
    fn default() -> Self {
        ChaseConfig { max_steps: 10_000, restricted: false, transcript: false }
    }
}

impl ChaseConfig {
    pub fn with_limit(max_steps: usize) -> Self {
        ChaseConfig { max_steps, ..Default::default() }
    }
}

/// An EGD trigger that would equate two distinct constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub rule: RuleId,
    pub trigger: Substitution,
    pub left: Term,
    pub right: Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChaseStatus {
    Saturated,
    Failed(Failure),
    StepLimitExceeded,
}

impl ChaseStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChaseStatus::Saturated => "saturated",
            ChaseStatus::Failed(_) => "failed",
            ChaseStatus::StepLimitExceeded => "step_limit_exceeded",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChaseStats {
    pub rounds: usize,
    pub tgd_steps: usize,
    pub egd_steps: usize,
    /// New facts withheld by the termination strategy.
    pub suppressed: usize,
}

/// A head fact withheld because `witness` already stands for it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Suppressed {
    pub atom: Atom,
    pub witness: FactId,
    /// Track the fact would have joined; absent for the warded chase.
    pub track: Option<FactId>,
}

/// One entry of a chase transcript.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Tgd { rule: RuleId, trigger: Substitution, produced: Vec<(FactId, Atom)>, suppressed: Vec<Suppressed> },
    Egd { rule: RuleId, trigger: Substitution, from: Term, to: Term },
    Failure(Failure),
}

fn subst_json(s: &Substitution) -> Value {
    Value::Object(s.iter().map(|(k, v)| (k.to_string(), Value::String(v.to_string()))).collect())
}

impl Step {
    pub fn to_json(&self) -> Value {
        match self {
            Step::Tgd { rule, trigger, produced, suppressed } => json!({
                "step": "tgd",
                "rule": rule.to_string(),
                "trigger": subst_json(trigger),
                "produced": produced.iter().map(|(id, a)| json!({"id": id.to_string(), "fact": a.to_string()})).collect::<Vec<_>>(),
                "suppressed": suppressed.iter().map(|s| json!({
                    "fact": s.atom.to_string(),
                    "witness": s.witness.to_string(),
                    "track": s.track.map(|t| t.to_string()),
                })).collect::<Vec<_>>(),
            }),
            Step::Egd { rule, trigger, from, to } => json!({
                "step": "egd",
                "rule": rule.to_string(),
                "trigger": subst_json(trigger),
                "from": from.to_string(),
                "to": to.to_string(),
            }),
            Step::Failure(f) => json!({
                "step": "failure",
                "rule": f.rule.to_string(),
                "trigger": subst_json(&f.trigger),
                "left": f.left.to_string(),
                "right": f.right.to_string(),
            }),
        }
    }
}

/// Writes one JSON object per line.
pub fn write_transcript<W: Write>(steps: &[Step], mut out: W) -> io::Result<()> {
    for s in steps {
        serde_json::to_writer(&mut out, &s.to_json())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ChaseOutcome {
    pub status: ChaseStatus,
    pub instance: Instance,
    pub graph: ChaseGraph,
    /// Idempotent map from rewritten nulls to their final images.
    pub egd_assignments: Substitution,
    pub stats: ChaseStats,
    pub transcript: Vec<Step>,
}

impl ChaseOutcome {
    pub fn is_saturated(&self) -> bool {
        self.status == ChaseStatus::Saturated
    }

    pub fn is_failed(&self) -> bool {
        matches!(self.status, ChaseStatus::Failed(_))
    }

    pub fn track(&self, id: FactId) -> FactId {
        self.graph.compute_track(id)
    }
}

/// Root of the warded-forest tree containing `id`.
pub fn compute_track(id: FactId, graph: &ChaseGraph) -> FactId {
    graph.compute_track(id)
}
