use std::fmt::Write;

use super::{Egd, Program, Query, Tgd};
use crate::model::Atom;

fn join_atoms(out: &mut String, atoms: &[Atom]) {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write!(out, "{a}").unwrap();
    }
}

pub(crate) fn print_tgd(out: &mut String, t: &Tgd) {
    join_atoms(out, &t.body);
    for (a, b) in &t.neq {
        write!(out, ", {a} != {b}").unwrap();
    }
    out.push_str(" -> ");
    join_atoms(out, &t.head);
    out.push('.');
}

pub(crate) fn print_egd(out: &mut String, e: &Egd) {
    join_atoms(out, &e.body);
    write!(out, " -> {} = {}.", e.lhs, e.rhs).unwrap();
}

pub(crate) fn print_query(out: &mut String, q: &Query) {
    out.push('?');
    if !q.output.is_empty() {
        out.push('(');
        for (i, v) in q.output.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push(')');
    }
    out.push(' ');
    join_atoms(out, &q.body);
    out.push('.');
}

/// Renders a program in the concrete syntax accepted by
/// [`parse_program`](super::parse_program): facts, then TGDs, EGDs and
/// queries, one statement per line.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for f in &p.facts {
        writeln!(out, "{f}.").unwrap();
    }
    for t in &p.tgds {
        print_tgd(&mut out, t);
        out.push('\n');
    }
    for e in &p.egds {
        print_egd(&mut out, e);
        out.push('\n');
    }
    for q in &p.queries {
        print_query(&mut out, q);
        out.push('\n');
    }
    out
}

impl std::fmt::Display for Tgd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::new();
        print_tgd(&mut s, self);
        f.write_str(&s)
    }
}

impl std::fmt::Display for Egd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::new();
        print_egd(&mut s, self);
        f.write_str(&s)
    }
}

impl std::fmt::Display for Query {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::new();
        print_query(&mut s, self);
        f.write_str(&s)
    }
}
