//! Backtracking conjunctive matching and homomorphism search between
//! instances.

use std::collections::{BTreeSet, HashMap};
use std::ops::ControlFlow;

use super::atom::{Atom, FactId};
use super::instance::Instance;
use super::subst::Substitution;
use super::term::{Symbol, Term};

#[derive(Clone, Copy, Debug)]
enum Slot {
    Var(usize),
    Fixed(Term),
}

#[derive(Clone, Debug)]
struct PatternAtom {
    pred: Symbol,
    args: Vec<Slot>,
}

/// A conjunction of atoms prepared for matching. Variables (and, when asked,
/// nulls) become numbered slots.
#[derive(Clone, Debug)]
pub struct Pattern {
    atoms: Vec<PatternAtom>,
    vars: Vec<Term>,
}

impl Pattern {
    pub fn new(atoms: &[Atom]) -> Pattern {
        Self::build(atoms, false)
    }

    /// Nulls are treated as variables. Used to map one instance into another.
    pub fn with_nulls_as_vars(atoms: &[Atom]) -> Pattern {
        Self::build(atoms, true)
    }

    fn build(atoms: &[Atom], nulls_as_vars: bool) -> Pattern {
        let mut slots: HashMap<Term, usize> = HashMap::new();
        let mut vars = Vec::new();
        let atoms = atoms
            .iter()
            .map(|a| PatternAtom {
                pred: a.pred,
                args: a
                    .args
                    .iter()
                    .map(|t| {
                        let open = t.is_var() || (nulls_as_vars && t.is_null());
                        if !open {
                            return Slot::Fixed(*t);
                        }
                        let next = vars.len();
                        let idx = *slots.entry(*t).or_insert_with(|| {
                            vars.push(*t);
                            next
                        });
                        Slot::Var(idx)
                    })
                    .collect(),
            })
            .collect();
        Pattern { atoms, vars }
    }

    /// The pattern's variables in first-occurrence order. Bindings passed to
    /// callbacks use the same order.
    pub fn vars(&self) -> &[Term] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn to_substitution(&self, binding: &[Term]) -> Substitution {
        Substitution::from_pairs(self.vars.iter().copied().zip(binding.iter().copied()))
    }

    /// Calls `f` once per homomorphism from the pattern into `inst`, with the
    /// variable binding and the matched fact of each pattern atom (in pattern
    /// order).
    pub fn for_each<F>(&self, inst: &Instance, mut f: F)
    where
        F: FnMut(&[Term], &[FactId]) -> ControlFlow<()>,
    {
        let order = self.join_order(inst);
        let mut binding = vec![None; self.vars.len()];
        let mut facts = vec![FactId(0); self.atoms.len()];
        let _ = self.search(0, &order, inst, &mut binding, &mut facts, &mut f);
    }

    pub fn matches(&self, inst: &Instance) -> Vec<Substitution> {
        let mut out = Vec::new();
        self.for_each(inst, |b, _| {
            out.push(self.to_substitution(b));
            ControlFlow::Continue(())
        });
        out
    }

    pub fn exists(&self, inst: &Instance) -> bool {
        let mut found = false;
        self.for_each(inst, |_, _| {
            found = true;
            ControlFlow::Break(())
        });
        found
    }

    /// Greedy order: next is the atom with the most bound positions, then
    /// the smaller relation, then pattern order.
    fn join_order(&self, inst: &Instance) -> Vec<usize> {
        let mut bound = vec![false; self.vars.len()];
        let mut placed = vec![false; self.atoms.len()];
        let mut order = Vec::with_capacity(self.atoms.len());
        for _ in 0..self.atoms.len() {
            let mut best: Option<(usize, usize, usize)> = None;
            for (i, a) in self.atoms.iter().enumerate() {
                if placed[i] {
                    continue;
                }
                let nbound = a
                    .args
                    .iter()
                    .filter(|s| match s {
                        Slot::Fixed(_) => true,
                        Slot::Var(v) => bound[*v],
                    })
                    .count();
                let size = inst.with_pred(a.pred).len();
                let better = match best {
                    None => true,
                    Some((_, bb, bs)) => nbound > bb || (nbound == bb && size < bs),
                };
                if better {
                    best = Some((i, nbound, size));
                }
            }
            let (i, _, _) = best.expect("an unplaced atom remains");
            placed[i] = true;
            for s in &self.atoms[i].args {
                if let Slot::Var(v) = s {
                    bound[*v] = true;
                }
            }
            order.push(i);
        }
        order
    }

    fn search<F>(
        &self,
        depth: usize,
        order: &[usize],
        inst: &Instance,
        binding: &mut Vec<Option<Term>>,
        facts: &mut Vec<FactId>,
        f: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[Term], &[FactId]) -> ControlFlow<()>,
    {
        if depth == order.len() {
            let full: Vec<Term> = binding.iter().map(|b| b.expect("all slots bound")).collect();
            return f(&full, facts);
        }
        let ai = order[depth];
        let pa = &self.atoms[ai];
        let mut candidates: Option<&[FactId]> = None;
        for (i, slot) in pa.args.iter().enumerate() {
            let known = match slot {
                Slot::Fixed(t) => Some(*t),
                Slot::Var(v) => binding[*v],
            };
            if let Some(t) = known {
                let list = inst.with_term_at(pa.pred, i, t);
                if candidates.is_none_or(|c| list.len() < c.len()) {
                    candidates = Some(list);
                }
            }
        }
        let candidates = candidates.unwrap_or_else(|| inst.with_pred(pa.pred));
        let mut newly: Vec<usize> = Vec::with_capacity(pa.args.len());
        for &fid in candidates {
            let Some(atom) = inst.get(fid) else { continue };
            if atom.args.len() != pa.args.len() {
                continue;
            }
            newly.clear();
            let mut ok = true;
            for (slot, &t) in pa.args.iter().zip(&atom.args) {
                match slot {
                    Slot::Fixed(expected) => {
                        if *expected != t {
                            ok = false;
                            break;
                        }
                    }
                    Slot::Var(v) => match binding[*v] {
                        Some(b) if b != t => {
                            ok = false;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            binding[*v] = Some(t);
                            newly.push(*v);
                        }
                    },
                }
            }
            if ok {
                facts[ai] = fid;
                let flow = self.search(depth + 1, order, inst, binding, facts, f);
                if flow.is_break() {
                    for v in &newly {
                        binding[*v] = None;
                    }
                    return flow;
                }
            }
            for v in &newly {
                binding[*v] = None;
            }
        }
        ControlFlow::Continue(())
    }
}

/// Every homomorphism `θ` with `θ(pattern) ⊆ inst`, each exactly once.
pub fn match_pattern(pattern: &[Atom], inst: &Instance) -> Vec<Substitution> {
    Pattern::new(pattern).matches(inst)
}

/// Searches for `h` with `h(src) ⊆ dst` that fixes constants. With `onto`,
/// additionally requires `h(src) = dst`. The result maps nulls of `src`;
/// nulls left out map to themselves.
pub fn find_homomorphism(src: &Instance, dst: &Instance, onto: bool) -> Option<Substitution> {
    if src.atoms().all(|a| dst.contains(a)) && (!onto || src.len() == dst.len()) {
        return Some(Substitution::new());
    }
    let mut covered: BTreeSet<FactId> = BTreeSet::new();
    let mut components: Vec<Vec<Atom>> = Vec::new();
    let mut owner: HashMap<Term, usize> = HashMap::new();
    for a in src.atoms() {
        if !a.has_nulls() {
            covered.insert(dst.id_of(a)?);
            continue;
        }
        let mut hits: Vec<usize> =
            a.args.iter().filter_map(|t| owner.get(t).copied()).collect::<BTreeSet<_>>().into_iter().collect();
        let target = match hits.first() {
            Some(&first) => first,
            None => {
                components.push(Vec::new());
                components.len() - 1
            }
        };
        hits.retain(|&c| c != target);
        for other in hits.into_iter().rev() {
            let moved = std::mem::take(&mut components[other]);
            for m in &moved {
                for t in m.args.iter().filter(|t| t.is_null()) {
                    owner.insert(*t, target);
                }
            }
            components[target].extend(moved);
        }
        for t in a.args.iter().filter(|t| t.is_null()) {
            owner.insert(*t, target);
        }
        components[target].push(a.clone());
    }
    components.retain(|c| !c.is_empty());

    // Each option is one homomorphism of a component together with its image.
    let mut options: Vec<Vec<(Substitution, BTreeSet<FactId>)>> = Vec::new();
    for comp in &components {
        let pattern = Pattern::with_nulls_as_vars(comp);
        let mut seen_images: BTreeSet<BTreeSet<FactId>> = BTreeSet::new();
        let mut opts = Vec::new();
        pattern.for_each(dst, |b, fids| {
            let image: BTreeSet<FactId> = fids.iter().copied().collect();
            if seen_images.insert(image.clone()) {
                opts.push((pattern.to_substitution(b), image));
            }
            if onto {
                ControlFlow::Continue(())
            } else {
                ControlFlow::Break(())
            }
        });
        if opts.is_empty() {
            return None;
        }
        options.push(opts);
    }

    if !onto {
        let mut h = Substitution::new();
        for opts in &options {
            for (k, v) in opts[0].0.iter() {
                h.insert(k, v);
            }
        }
        return Some(h);
    }

    let all: BTreeSet<FactId> = dst.iter().map(|(id, _)| id).collect();
    // reach[i] = facts that components i.. could still cover.
    let mut reach = vec![BTreeSet::new(); options.len() + 1];
    for i in (0..options.len()).rev() {
        let mut r = reach[i + 1].clone();
        for (_, img) in &options[i] {
            r.extend(img.iter().copied());
        }
        reach[i] = r;
    }
    let mut chosen = Vec::with_capacity(options.len());
    if cover(0, &options, &reach, &all, &mut covered, &mut chosen) {
        let mut h = Substitution::new();
        for (i, &pick) in chosen.iter().enumerate() {
            for (k, v) in options[i][pick].0.iter() {
                h.insert(k, v);
            }
        }
        return Some(h);
    }
    None
}

fn cover(
    i: usize,
    options: &[Vec<(Substitution, BTreeSet<FactId>)>],
    reach: &[BTreeSet<FactId>],
    all: &BTreeSet<FactId>,
    covered: &mut BTreeSet<FactId>,
    chosen: &mut Vec<usize>,
) -> bool {
    if all.iter().any(|f| !covered.contains(f) && !reach[i].contains(f)) {
        return false;
    }
    if i == options.len() {
        return true;
    }
    for (k, (_, img)) in options[i].iter().enumerate() {
        let added: Vec<FactId> = img.iter().copied().filter(|f| !covered.contains(f)).collect();
        covered.extend(added.iter().copied());
        chosen.push(k);
        if cover(i + 1, options, reach, all, covered, chosen) {
            return true;
        }
        chosen.pop();
        for f in added {
            covered.remove(&f);
        }
    }
    false
}
