//! Terms, atoms, instances, substitutions and homomorphism search.

mod atom;
mod homomorphism;
mod instance;
mod subst;
mod term;

pub use atom::{canonical_pattern, isomorphic, Atom, Canon, CanonTerm, Fact, FactId};
pub use homomorphism::{find_homomorphism, match_pattern, Pattern};
pub use instance::{Instance, Merge};
pub use subst::{apply, compose, Substitution};
pub use term::{is_bare_constant, NullGen, NullId, Symbol, Term};
