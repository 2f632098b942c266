//! Static classification of positions and variables: affected positions,
//! harmful and dangerous variables, wards, tainted positions with their
//! causes, and the safe-taintedness verdict.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::model::{Atom, Symbol, Term};
use crate::syntax::{Program, RuleId, Tgd};

/// `pred[i]` with a 1-based index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Position {
    pub pred: Symbol,
    pub index: usize,
}

impl Position {
    pub fn new(pred: &str, index: usize) -> Position {
        Position { pred: Symbol::intern(pred), index }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.pred, self.index)
    }
}

impl Serialize for Position {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn serialize_term<S: Serializer>(t: &Term, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(t)
}

/// Positions at which `v` occurs in `atoms`.
fn positions_of(v: Term, atoms: &[Atom]) -> Vec<Position> {
    let mut out = Vec::new();
    for a in atoms {
        for (i, t) in a.args.iter().enumerate() {
            if *t == v {
                out.push(Position { pred: a.pred, index: i + 1 });
            }
        }
    }
    out
}

fn vars_in_order(atoms: &[Atom]) -> Vec<Term> {
    let mut out = Vec::new();
    for v in atoms.iter().flat_map(|a| a.variables()) {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VarClass {
    Harmless,
    Harmful,
    Dangerous,
}

/// A body variable's class with respect to affected positions, and whether
/// it sits in a tainted position.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct VarInfo {
    pub class: VarClass,
    pub tainted: bool,
}

/// Least fixpoint of: positions of existential variables, plus head
/// positions of variables whose body occurrences are all affected.
pub fn affected_positions(p: &Program) -> BTreeSet<Position> {
    let mut affected = BTreeSet::new();
    for t in &p.tgds {
        for z in t.existentials() {
            affected.extend(positions_of(z, &t.head));
        }
    }
    loop {
        let mut changed = false;
        for t in &p.tgds {
            for v in vars_in_order(&t.body) {
                let head = positions_of(v, &t.head);
                if head.is_empty() {
                    continue;
                }
                if positions_of(v, &t.body).iter().all(|q| affected.contains(q)) {
                    for q in head {
                        changed |= affected.insert(q);
                    }
                }
            }
        }
        if !changed {
            return affected;
        }
    }
}

/// Classifies the body variables of a rule. A variable is harmful when all
/// its body occurrences are affected, dangerous when it is also in the head.
pub fn classify_rule_variables(
    body: &[Atom],
    head: &[Atom],
    affected: &BTreeSet<Position>,
) -> BTreeMap<Term, VarClass> {
    vars_in_order(body)
        .into_iter()
        .map(|v| {
            let harmful = positions_of(v, body).iter().all(|q| affected.contains(q));
            let class = if !harmful {
                VarClass::Harmless
            } else if head.iter().any(|a| a.args.contains(&v)) {
                VarClass::Dangerous
            } else {
                VarClass::Harmful
            };
            (v, class)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WardViolation {
    pub rule: RuleId,
    #[serde(serialize_with = "serialize_terms")]
    pub variables: Vec<Term>,
}

fn serialize_terms<S: Serializer>(ts: &[Term], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(ts.iter().map(|t| t.to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wardedness {
    /// Per TGD, the index of its ward in the body, if it has one.
    pub wards: Vec<Option<usize>>,
    pub violations: Vec<WardViolation>,
}

impl Wardedness {
    pub fn is_warded(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The first body atom holding every dangerous variable, `None` when the
/// rule has no dangerous variables, or the dangerous variables when no
/// single atom holds them all.
fn find_ward(t: &Tgd, affected: &BTreeSet<Position>) -> Result<Option<usize>, Vec<Term>> {
    let dangerous: Vec<Term> = classify_rule_variables(&t.body, &t.head, affected)
        .into_iter()
        .filter(|(_, c)| *c == VarClass::Dangerous)
        .map(|(v, _)| v)
        .collect();
    if dangerous.is_empty() {
        return Ok(None);
    }
    t.body
        .iter()
        .position(|a| dangerous.iter().all(|v| a.args.contains(v)))
        .map(Some)
        .ok_or(dangerous)
}

pub fn check_warded(p: &Program) -> Wardedness {
    let affected = affected_positions(p);
    let mut wards = Vec::new();
    let mut violations = Vec::new();
    for (i, t) in p.tgds.iter().enumerate() {
        match find_ward(t, &affected) {
            Ok(w) => wards.push(w),
            Err(variables) => {
                wards.push(None);
                violations.push(WardViolation { rule: RuleId::Tgd(i), variables });
            }
        }
    }
    Wardedness { wards, violations }
}

/// Tainted positions and, for each, the EGDs that can rewrite a null there.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Taint {
    pub seeds: BTreeSet<Position>,
    pub tainted: BTreeSet<Position>,
    pub cause: BTreeMap<Position, BTreeSet<RuleId>>,
}

/// Seeds each affected position of a harmful EGD side, then propagates both
/// ways through TGDs along variables shared by body and head.
pub fn tainted_positions(p: &Program) -> Taint {
    taint_with(p, &affected_positions(p))
}

fn taint_with(p: &Program, affected: &BTreeSet<Position>) -> Taint {
    let mut taint = Taint::default();
    for (i, e) in p.egds.iter().enumerate() {
        let classes = classify_rule_variables(&e.body, &[], affected);
        for side in [e.lhs, e.rhs] {
            if classes.get(&side) != Some(&VarClass::Harmful) {
                continue;
            }
            for q in positions_of(side, &e.body) {
                taint.seeds.insert(q);
                taint.tainted.insert(q);
                taint.cause.entry(q).or_default().insert(RuleId::Egd(i));
            }
        }
    }
    loop {
        let mut changed = false;
        for t in &p.tgds {
            for v in vars_in_order(&t.body) {
                let body = positions_of(v, &t.body);
                let head = positions_of(v, &t.head);
                if head.is_empty() {
                    continue;
                }
                for (from, to) in [(&body, &head), (&head, &body)] {
                    let causes: BTreeSet<RuleId> = from
                        .iter()
                        .filter(|q| taint.tainted.contains(q))
                        .flat_map(|q| taint.cause.get(q).into_iter().flatten().copied())
                        .collect();
                    if !from.iter().any(|q| taint.tainted.contains(q)) {
                        continue;
                    }
                    for q in to {
                        changed |= taint.tainted.insert(*q);
                        let entry = taint.cause.entry(*q).or_default();
                        for c in &causes {
                            changed |= entry.insert(*c);
                        }
                    }
                }
            }
        }
        if !changed {
            return taint;
        }
    }
}

/// Why a rule is not certified.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// A tainted body variable occurring more than once in the body.
    RepeatedTaintedVariable {
        rule: RuleId,
        #[serde(serialize_with = "serialize_term")]
        variable: Term,
        occurrences: usize,
    },
    /// A constant written in a tainted position.
    ConstantInTaintedPosition {
        rule: RuleId,
        position: Position,
        #[serde(serialize_with = "serialize_term")]
        constant: Term,
    },
}

impl Witness {
    pub fn rule(&self) -> RuleId {
        match self {
            Witness::RepeatedTaintedVariable { rule, .. } | Witness::ConstantInTaintedPosition { rule, .. } => *rule,
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::RepeatedTaintedVariable { rule, variable, occurrences } => {
                write!(f, "{rule}: tainted variable {variable} occurs {occurrences} times in the body")
            }
            Witness::ConstantInTaintedPosition { rule, position, constant } => {
                write!(f, "{rule}: constant {constant} in tainted position {position}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SafetyVerdict {
    Safe,
    Unknown(Vec<Witness>),
}

impl SafetyVerdict {
    pub fn is_safe(&self) -> bool {
        matches!(self, SafetyVerdict::Safe)
    }

    pub fn witnesses(&self) -> &[Witness] {
        match self {
            SafetyVerdict::Safe => &[],
            SafetyVerdict::Unknown(w) => w,
        }
    }
}

/// Occurrences of `v` in a rule body, counting `!=` conditions.
fn body_occurrences(p: &Program, id: RuleId, v: Term) -> usize {
    let atoms = positions_of(v, p.body(id)).len();
    let neq = match id {
        RuleId::Tgd(i) => p.tgds[i].neq.iter().map(|(a, b)| (*a == v) as usize + (*b == v) as usize).sum(),
        RuleId::Egd(_) => 0,
    };
    atoms + neq
}

fn safety_with(p: &Program, tainted: &BTreeSet<Position>) -> SafetyVerdict {
    let mut witnesses = Vec::new();
    for id in p.rule_ids() {
        let body = p.body(id);
        for v in vars_in_order(body) {
            if !positions_of(v, body).iter().any(|q| tainted.contains(q)) {
                continue;
            }
            let occurrences = body_occurrences(p, id, v);
            if occurrences > 1 {
                witnesses.push(Witness::RepeatedTaintedVariable { rule: id, variable: v, occurrences });
            }
        }
        for a in body.iter().chain(p.head(id)) {
            for (i, t) in a.args.iter().enumerate() {
                let q = Position { pred: a.pred, index: i + 1 };
                if t.is_const() && tainted.contains(&q) {
                    witnesses.push(Witness::ConstantInTaintedPosition { rule: id, position: q, constant: *t });
                }
            }
        }
    }
    if witnesses.is_empty() {
        SafetyVerdict::Safe
    } else {
        SafetyVerdict::Unknown(witnesses)
    }
}

/// Safe when, in every TGD and EGD, each tainted body variable occurs once in
/// the body and no constant sits in a tainted position. Safe implies the
/// EGDs are harmless; `Unknown` only means the check could not show it.
pub fn check_safe_taintedness(p: &Program) -> SafetyVerdict {
    safety_with(p, &tainted_positions(p).tainted)
}

/// Everything the analysis knows about a program.
#[derive(Clone, Debug)]
pub struct PositionAnalysis {
    pub affected: BTreeSet<Position>,
    pub taint: Taint,
    pub per_rule: BTreeMap<RuleId, Vec<(Term, VarInfo)>>,
    pub wardedness: Wardedness,
    pub safety: SafetyVerdict,
}

impl PositionAnalysis {
    pub fn is_warded(&self) -> bool {
        self.wardedness.is_warded()
    }

    pub fn is_safe(&self) -> bool {
        self.safety.is_safe()
    }

    /// Ward atom of a TGD, if any.
    pub fn ward(&self, tgd: usize) -> Option<usize> {
        self.wardedness.wards.get(tgd).copied().flatten()
    }
}

pub fn analyze(p: &Program) -> PositionAnalysis {
    let affected = affected_positions(p);
    let taint = taint_with(p, &affected);
    let mut per_rule = BTreeMap::new();
    for id in p.rule_ids() {
        let body = p.body(id);
        let classes = classify_rule_variables(body, p.head(id), &affected);
        let infos = vars_in_order(body)
            .into_iter()
            .map(|v| {
                let tainted = positions_of(v, body).iter().any(|q| taint.tainted.contains(q));
                (v, VarInfo { class: classes[&v], tainted })
            })
            .collect();
        per_rule.insert(id, infos);
    }
    let wardedness = check_warded(p);
    let safety = safety_with(p, &taint.tainted);
    PositionAnalysis { affected, taint, per_rule, wardedness, safety }
}

/// JSON form of [`PositionAnalysis`].
#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub warded: bool,
    pub safe: bool,
    pub affected: Vec<Position>,
    pub tainted: Vec<Position>,
    pub taint_cause: BTreeMap<String, Vec<RuleId>>,
    pub rules: Vec<RuleReport>,
    pub ward_violations: Vec<WardViolation>,
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RuleReport {
    pub id: RuleId,
    pub text: String,
    /// Index of the ward in the body, for TGDs that have one.
    pub ward: Option<usize>,
    pub variables: BTreeMap<String, VarInfo>,
}

impl AnalysisReport {
    pub fn new(p: &Program, a: &PositionAnalysis) -> AnalysisReport {
        let rules = p
            .rule_ids()
            .map(|id| RuleReport {
                id,
                text: match id {
                    RuleId::Tgd(i) => p.tgds[i].to_string(),
                    RuleId::Egd(i) => p.egds[i].to_string(),
                },
                ward: match id {
                    RuleId::Tgd(i) => a.ward(i),
                    RuleId::Egd(_) => None,
                },
                variables: a.per_rule[&id].iter().map(|(v, info)| (v.to_string(), *info)).collect(),
            })
            .collect();
        AnalysisReport {
            warded: a.is_warded(),
            safe: a.is_safe(),
            affected: a.affected.iter().copied().collect(),
            tainted: a.taint.tainted.iter().copied().collect(),
            taint_cause: a
                .taint
                .cause
                .iter()
                .map(|(q, c)| (q.to_string(), c.iter().copied().collect()))
                .collect(),
            rules,
            ward_violations: a.wardedness.violations.clone(),
            witnesses: a.safety.witnesses().to_vec(),
        }
    }
}
