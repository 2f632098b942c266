use std::collections::BTreeMap;
use std::fmt;

use super::atom::Atom;
use super::term::Term;

/// A finite function on terms. Terms outside the domain map to themselves.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<Term, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Term, Term)>>(pairs: I) -> Self {
        let mut s = Substitution::new();
        for (k, v) in pairs {
            s.insert(k, v);
        }
        s
    }

    /// Sets `from -> to`, replacing any previous image of `from`.
    pub fn insert(&mut self, from: Term, to: Term) {
        if from == to {
            self.map.remove(&from);
        } else {
            self.map.insert(from, to);
        }
    }

    pub fn get(&self, t: Term) -> Option<Term> {
        self.map.get(&t).copied()
    }

    pub fn apply_term(&self, t: Term) -> Term {
        self.map.get(&t).copied().unwrap_or(t)
    }

    pub fn apply_atom(&self, atom: &Atom) -> Atom {
        Atom { pred: atom.pred, args: atom.args.iter().map(|t| self.apply_term(*t)).collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Term, Term)> + '_ {
        self.map.iter().map(|(k, v)| (*k, *v))
    }

    pub fn domain(&self) -> impl Iterator<Item = Term> + '_ {
        self.map.keys().copied()
    }

    /// True when no constant is moved.
    pub fn fixes_constants(&self) -> bool {
        self.map.keys().all(|t| !t.is_const())
    }

    /// `h(h(t)) == h(t)` for every term in the domain.
    pub fn is_idempotent(&self) -> bool {
        self.map.values().all(|v| !self.map.contains_key(v))
    }

    /// Records `from -> to` and rewrites earlier images of `from` to `to`, so
    /// the map stays idempotent when `to` is not itself in the domain.
    pub fn assign_back_substituting(&mut self, from: Term, to: Term) {
        for v in self.map.values_mut() {
            if *v == from {
                *v = to;
            }
        }
        self.map.retain(|k, v| k != v);
        self.insert(from, to);
    }
}

/// Rewrite every atom of `xs` under `s`.
pub fn apply(s: &Substitution, xs: &[Atom]) -> Vec<Atom> {
    xs.iter().map(|a| s.apply_atom(a)).collect()
}

/// The substitution that applies `first`, then `second`.
pub fn compose(first: &Substitution, second: &Substitution) -> Substitution {
    let mut out = Substitution::new();
    for (k, v) in first.iter() {
        out.insert(k, second.apply_term(v));
    }
    for (k, v) in second.iter() {
        if first.get(k).is_none() {
            out.insert(k, v);
        }
    }
    out
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}->{v}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
