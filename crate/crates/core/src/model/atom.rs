use std::collections::HashMap;
use std::fmt;

use super::term::{NullId, Symbol, Term};

/// `pred(t1, ..., tn)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Atom {
        Atom { pred: Symbol::intern(pred), args }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn has_nulls(&self) -> bool {
        self.args.iter().any(Term::is_null)
    }

    pub fn variables(&self) -> impl Iterator<Item = Term> + '_ {
        self.args.iter().copied().filter(Term::is_var)
    }

    pub fn nulls(&self) -> impl Iterator<Item = NullId> + '_ {
        self.args.iter().filter_map(|t| match t {
            Term::Null(n) => Some(*n),
            _ => None,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Stable fact identity inside one instance.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FactId(pub u32);

impl fmt::Display for FactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

/// A ground atom together with its identity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Fact {
    pub id: FactId,
    pub atom: Atom,
}

/// One slot of a canonical pattern.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum CanonTerm {
    Const(Symbol),
    /// Index of the null's first occurrence among the nulls of the atom.
    Null(u32),
}

/// The shape of a fact up to renaming of nulls.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Canon {
    pub pred: Symbol,
    pub args: Vec<CanonTerm>,
}

/// Replace each null by the index of its first occurrence, keep constants.
pub fn canonical_pattern(atom: &Atom) -> Canon {
    let mut seen: HashMap<NullId, u32> = HashMap::new();
    let args = atom
        .args
        .iter()
        .map(|t| match t {
            Term::Const(c) => CanonTerm::Const(*c),
            Term::Null(n) => {
                let next = seen.len() as u32;
                CanonTerm::Null(*seen.entry(*n).or_insert(next))
            }
            Term::Var(_) => panic!("canonical_pattern called on a non-ground atom {atom}"),
        })
        .collect();
    Canon { pred: atom.pred, args }
}

/// Two facts are isomorphic when a bijective renaming of nulls maps one onto
/// the other.
pub fn isomorphic(f: &Atom, g: &Atom) -> bool {
    f.pred == g.pred && f.arity() == g.arity() && canonical_pattern(f) == canonical_pattern(g)
}
