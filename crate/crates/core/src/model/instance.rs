use std::collections::{BTreeSet, HashMap};

use super::atom::{Atom, Fact, FactId};
use super::subst::Substitution;
use super::term::{NullId, Symbol, Term};

/// A set of ground facts with stable ids and per-predicate / per-position
/// indexes.
#[derive(Clone, Default)]
pub struct Instance {
    slots: Vec<Option<Atom>>,
    lookup: HashMap<Atom, FactId>,
    by_pred: HashMap<Symbol, Vec<FactId>>,
    by_pos: HashMap<(Symbol, u32, Term), Vec<FactId>>,
    live: usize,
}

/// Two facts collapsed into one by a rewrite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Merge {
    pub removed: FactId,
    pub kept: FactId,
}

impl Instance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_atoms<I: IntoIterator<Item = Atom>>(atoms: I) -> Self {
        let mut inst = Instance::new();
        for a in atoms {
            inst.insert(a);
        }
        inst
    }

    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Inserts a ground atom. Returns its id and whether it was new.
    pub fn insert(&mut self, atom: Atom) -> (FactId, bool) {
        assert!(atom.is_ground(), "facts cannot contain variables: {atom}");
        if let Some(&id) = self.lookup.get(&atom) {
            return (id, false);
        }
        let id = FactId(self.slots.len() as u32);
        self.index(id, &atom);
        self.lookup.insert(atom.clone(), id);
        self.slots.push(Some(atom));
        self.live += 1;
        (id, true)
    }

    fn index(&mut self, id: FactId, atom: &Atom) {
        self.by_pred.entry(atom.pred).or_default().push(id);
        for (i, t) in atom.args.iter().enumerate() {
            self.by_pos.entry((atom.pred, i as u32, *t)).or_default().push(id);
        }
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.lookup.contains_key(atom)
    }

    pub fn id_of(&self, atom: &Atom) -> Option<FactId> {
        self.lookup.get(atom).copied()
    }

    pub fn get(&self, id: FactId) -> Option<&Atom> {
        self.slots.get(id.0 as usize).and_then(Option::as_ref)
    }

    /// Live facts in id order.
    pub fn facts(&self) -> impl Iterator<Item = Fact> + '_ {
        self.iter().map(|(id, a)| Fact { id, atom: a.clone() })
    }

    pub fn iter(&self) -> impl Iterator<Item = (FactId, &Atom)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.as_ref().map(|a| (FactId(i as u32), a)))
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> + '_ {
        self.slots.iter().flatten()
    }

    pub fn with_pred(&self, pred: Symbol) -> &[FactId] {
        self.by_pred.get(&pred).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn with_term_at(&self, pred: Symbol, pos: usize, t: Term) -> &[FactId] {
        self.by_pos.get(&(pred, pos as u32, t)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn predicates(&self) -> BTreeSet<Symbol> {
        self.by_pred.iter().filter(|(_, v)| !v.is_empty()).map(|(k, _)| *k).collect()
    }

    pub fn nulls(&self) -> BTreeSet<NullId> {
        self.atoms().flat_map(|a| a.nulls()).collect()
    }

    pub fn constants(&self) -> BTreeSet<Term> {
        self.atoms().flat_map(|a| a.args.iter().copied()).filter(Term::is_const).collect()
    }

    pub fn max_null(&self) -> u32 {
        self.nulls().iter().next_back().map_or(0, |n| n.0)
    }

    /// Rewrites every fact under `h`, which must be idempotent. Ids are kept;
    /// when two facts become equal the older id survives.
    pub fn rewrite(&mut self, h: &Substitution) -> Vec<Merge> {
        debug_assert!(h.is_idempotent());
        if h.is_empty() {
            return Vec::new();
        }
        let mut merges = Vec::new();
        let mut changed = false;
        for i in 0..self.slots.len() {
            let Some(old) = self.slots[i].as_ref() else { continue };
            if !old.args.iter().any(|t| h.get(*t).is_some()) {
                continue;
            }
            changed = true;
            let new = h.apply_atom(old);
            let old = self.slots[i].take().expect("checked above");
            self.lookup.remove(&old);
            let id = FactId(i as u32);
            match self.lookup.get(&new).copied() {
                Some(other) if other < id => {
                    merges.push(Merge { removed: id, kept: other });
                    self.live -= 1;
                }
                Some(other) => {
                    self.slots[other.0 as usize] = None;
                    self.slots[i] = Some(new.clone());
                    self.lookup.insert(new, id);
                    merges.push(Merge { removed: other, kept: id });
                    self.live -= 1;
                }
                None => {
                    self.slots[i] = Some(new.clone());
                    self.lookup.insert(new, id);
                }
            }
        }
        if changed {
            self.reindex();
        }
        merges
    }

    fn reindex(&mut self) {
        self.by_pred.clear();
        self.by_pos.clear();
        let slots = std::mem::take(&mut self.slots);
        for (i, a) in slots.iter().enumerate() {
            if let Some(a) = a {
                self.index(FactId(i as u32), a);
            }
        }
        self.slots = slots;
    }

    /// Same facts regardless of ids.
    pub fn same_facts(&self, other: &Instance) -> bool {
        self.len() == other.len() && self.atoms().all(|a| other.contains(a))
    }

    /// Facts sorted by their printed form, for stable output.
    pub fn sorted_atoms(&self) -> Vec<Atom> {
        let mut v: Vec<Atom> = self.atoms().cloned().collect();
        v.sort_by_cached_key(|a| (a.pred.as_str(), a.to_string()));
        v
    }
}

impl std::fmt::Debug for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.atoms()).finish()
    }
}
