//! The `.dlge` rule language: program types, parser, printer, CSV fact
//! loading and well-formedness checks.
//!
//! ```text
//! % facts
//! component(engine).
//! % TGD; head-only variables are existential
//! component(X) -> component(Z), partOf(X,Z).
//! % EGD; several equalities become several EGDs
//! partOf(X,V), partOf(X,W) -> V = W.
//! % Boolean query and query with output variables
//! ? partOf(thrust,camshaft).
//! ?(X) partOf(X,engine).
//! ```

mod csv_facts;
mod lexer;
mod parser;
mod printer;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::model::{Atom, Term};

pub use csv_facts::{load_csv_dir, merge_facts};
pub use parser::{parse_file, parse_program};
pub use printer::print_program;
pub use validate::{validate, Diagnostic};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("{line}:{col}: {message}")]
    Parse { line: usize, col: usize, message: String },
    #[error(
        "predicate {pred} used with arity {arity} on line {line}, but with arity {first_arity} on line {first_line}"
    )]
    ArityConflict { pred: String, first_line: usize, first_arity: usize, line: usize, arity: usize },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// `body -> head`. Head variables missing from the body are existential.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tgd {
    pub body: Vec<Atom>,
    /// `X != Y` conditions. Each side must be bound by `body`.
    pub neq: Vec<(Term, Term)>,
    pub head: Vec<Atom>,
}

impl Tgd {
    pub fn body_vars(&self) -> BTreeSet<Term> {
        self.body.iter().flat_map(|a| a.variables()).collect()
    }

    /// Existential variables in order of first occurrence in the head.
    pub fn existentials(&self) -> Vec<Term> {
        let body = self.body_vars();
        let mut out = Vec::new();
        for v in self.head.iter().flat_map(|a| a.variables()) {
            if !body.contains(&v) && !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    pub fn is_linear(&self) -> bool {
        self.body.len() == 1
    }
}

/// `body -> lhs = rhs` over two distinct body variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Egd {
    pub body: Vec<Atom>,
    pub lhs: Term,
    pub rhs: Term,
}

impl Egd {
    pub fn body_vars(&self) -> BTreeSet<Term> {
        self.body.iter().flat_map(|a| a.variables()).collect()
    }
}

/// `?(X,Y) body.` An empty output list is a Boolean query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub output: Vec<Term>,
    pub body: Vec<Atom>,
}

impl Query {
    pub fn is_boolean(&self) -> bool {
        self.output.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub tgds: Vec<Tgd>,
    pub egds: Vec<Egd>,
    pub facts: Vec<Atom>,
    pub queries: Vec<Query>,
}

impl Program {
    /// The same program without its EGDs.
    pub fn tgds_only(&self) -> Program {
        Program { egds: Vec::new(), ..self.clone() }
    }

    /// Every rule id, TGDs first.
    pub fn rule_ids(&self) -> impl Iterator<Item = RuleId> {
        (0..self.tgds.len()).map(RuleId::Tgd).chain((0..self.egds.len()).map(RuleId::Egd))
    }

    /// Body atoms of a rule.
    pub fn body(&self, id: RuleId) -> &[Atom] {
        match id {
            RuleId::Tgd(i) => &self.tgds[i].body,
            RuleId::Egd(i) => &self.egds[i].body,
        }
    }

    /// Head atoms of a rule; EGDs have none.
    pub fn head(&self, id: RuleId) -> &[Atom] {
        match id {
            RuleId::Tgd(i) => &self.tgds[i].head,
            RuleId::Egd(_) => &[],
        }
    }

    /// All atoms of rules, facts and queries, in program order.
    pub fn all_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.facts
            .iter()
            .chain(self.tgds.iter().flat_map(|t| t.body.iter().chain(&t.head)))
            .chain(self.egds.iter().flat_map(|e| &e.body))
            .chain(self.queries.iter().flat_map(|q| &q.body))
    }

    /// Highest arity among all predicates.
    pub fn max_arity(&self) -> usize {
        self.all_atoms().map(Atom::arity).max().unwrap_or(0)
    }
}

/// A rule reference, numbered from 1 within its kind when printed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleId {
    Tgd(usize),
    Egd(usize),
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleId::Tgd(i) => write!(f, "tgd{}", i + 1),
            RuleId::Egd(i) => write!(f, "egd{}", i + 1),
        }
    }
}

impl Serialize for RuleId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
