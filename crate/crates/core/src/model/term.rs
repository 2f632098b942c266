use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

/// An interned string. Predicates, constants and variable names all share
/// one table, so comparing two symbols is an integer compare.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u32);

#[derive(Default)]
struct Interner {
    ids: HashMap<&'static str, u32>,
    names: Vec<&'static str>,
}

fn interner() -> &'static Mutex<Interner> {
    static TABLE: OnceLock<Mutex<Interner>> = OnceLock::new();
    TABLE.get_or_init(Default::default)
}

impl Symbol {
    pub fn intern(name: &str) -> Symbol {
        let mut table = interner().lock().expect("symbol table poisoned");
        if let Some(&id) = table.ids.get(name) {
            return Symbol(id);
        }
        // Symbols live for the whole process; leaking keeps `as_str` borrow-free.
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        let id = table.names.len() as u32;
        table.names.push(leaked);
        table.ids.insert(leaked, id);
        Symbol(id)
    }

    pub fn as_str(self) -> &'static str {
        interner().lock().expect("symbol table poisoned").names[self.0 as usize]
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identifier of a labelled null. Rendered as `_:nK`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct NullId(pub u32);

/// A constant, a labelled null or a variable.
///
/// The derived order puts constants first, then nulls (oldest first), then
/// variables. Equality is kind plus name.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Symbol),
    Null(NullId),
    Var(Symbol),
}

impl Term {
    pub fn constant(name: &str) -> Term {
        Term::Const(Symbol::intern(name))
    }

    pub fn var(name: &str) -> Term {
        Term::Var(Symbol::intern(name))
    }

    pub fn null(id: u32) -> Term {
        Term::Null(NullId(id))
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Term::Const(_))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Term::Null(_))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Ground terms (constants and nulls) may appear in facts.
    pub fn is_ground(&self) -> bool {
        !self.is_var()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(s) => write_constant(f, s.as_str()),
            Term::Null(n) => write!(f, "_:n{}", n.0),
            Term::Var(s) => f.write_str(s.as_str()),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// True when `name` can be written without quotes and still read back as a
/// constant: a lowercase-initial identifier or a plain numeral.
pub fn is_bare_constant(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {
            name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        }
        Some(c) if c.is_ascii_digit() => {
            let mut parts = name.splitn(2, '.');
            let int = parts.next().unwrap_or("");
            let frac = parts.next();
            int.chars().all(|c| c.is_ascii_digit())
                && frac.is_none_or(|f| !f.is_empty() && f.chars().all(|c| c.is_ascii_digit()))
        }
        _ => false,
    }
}

fn write_constant(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    if is_bare_constant(name) {
        return f.write_str(name);
    }
    f.write_str("\"")?;
    for c in name.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            _ => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

/// Issues labelled nulls. Identifiers start at 1 and are never reused by the
/// same generator.
#[derive(Clone, Debug)]
pub struct NullGen {
    next: u32,
}

impl Default for NullGen {
    fn default() -> Self {
        NullGen { next: 1 }
    }
}

impl NullGen {
    pub fn new() -> Self {
        Self::default()
    }

    /// A generator whose first null is younger than every id below `floor`.
    pub fn starting_after(floor: u32) -> Self {
        NullGen { next: floor + 1 }
    }

    pub fn fresh_null(&mut self) -> Term {
        let id = self.next;
        self.next += 1;
        Term::Null(NullId(id))
    }

    /// Number of nulls issued so far.
    pub fn issued(&self) -> u32 {
        self.next - 1
    }
}
