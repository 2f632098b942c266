use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde_json::{json, Value};

use crate::model::{Substitution, Term};

/// Disjoint sets of terms joined by EGD edges. Each component holds at most
/// one constant; its representative is that constant, else its oldest null.
#[derive(Clone, Debug, Default)]
pub struct UnificationGraph {
    index: HashMap<Term, usize>,
    terms: Vec<Term>,
    parent: Vec<usize>,
    size: Vec<usize>,
    /// Per root: the component's representative.
    rep: Vec<Term>,
    edges: Vec<(Term, Term)>,
}

/// Two distinct constants ended up in one component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Clash {
    pub left: Term,
    pub right: Term,
}

fn better(a: Term, b: Term) -> Term {
    match (a, b) {
        (Term::Const(_), _) => a,
        (_, Term::Const(_)) => b,
        _ => a.min(b),
    }
}

impl UnificationGraph {
    pub fn new() -> Self {
        Self::default()
    }

    fn node(&mut self, t: Term) -> usize {
        debug_assert!(t.is_ground());
        if let Some(&i) = self.index.get(&t) {
            return i;
        }
        let i = self.terms.len();
        self.index.insert(t, i);
        self.terms.push(t);
        self.parent.push(i);
        self.size.push(1);
        self.rep.push(t);
        i
    }

    fn root(&self, mut i: usize) -> usize {
        while self.parent[i] != i {
            i = self.parent[i];
        }
        i
    }

    fn root_mut(&mut self, i: usize) -> usize {
        let r = self.root(i);
        let mut cur = i;
        while self.parent[cur] != r {
            let next = self.parent[cur];
            self.parent[cur] = r;
            cur = next;
        }
        r
    }

    /// Representative of `t`'s component; `t` itself when unseen.
    pub fn find(&self, t: Term) -> Term {
        match self.index.get(&t) {
            Some(&i) => self.rep[self.root(i)],
            None => t,
        }
    }

    pub fn same_component(&self, a: Term, b: Term) -> bool {
        a == b || self.find(a) == self.find(b)
    }

    /// Adds the edge `a`–`b`. Returns whether two components merged, or the
    /// clash if both carried a constant.
    pub fn add_edge(&mut self, a: Term, b: Term) -> Result<bool, Clash> {
        let (i, j) = (self.node(a), self.node(b));
        let (ri, rj) = (self.root_mut(i), self.root_mut(j));
        if ri == rj {
            return Ok(false);
        }
        let (ca, cb) = (self.rep[ri], self.rep[rj]);
        if ca.is_const() && cb.is_const() {
            return Err(Clash { left: ca, right: cb });
        }
        self.edges.push((a, b));
        let (big, small) = if self.size[ri] >= self.size[rj] { (ri, rj) } else { (rj, ri) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        self.rep[big] = better(ca, cb);
        Ok(true)
    }

    pub fn edges(&self) -> &[(Term, Term)] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.terms.len()
    }

    /// Components with more than one term, keyed by representative.
    pub fn components(&self) -> BTreeMap<Term, BTreeSet<Term>> {
        let mut out: BTreeMap<Term, BTreeSet<Term>> = BTreeMap::new();
        for (i, t) in self.terms.iter().enumerate() {
            out.entry(self.rep[self.root(i)]).or_default().insert(*t);
        }
        out.retain(|_, m| m.len() > 1);
        out
    }

    /// The partition alone, independent of representative choice.
    pub fn partition(&self) -> BTreeSet<BTreeSet<Term>> {
        self.components().into_values().collect()
    }

    /// Maps every null to its representative.
    pub fn resolution(&self) -> Substitution {
        Substitution::from_pairs(
            self.terms.iter().enumerate().filter(|(_, t)| t.is_null()).map(|(i, t)| (*t, self.rep[self.root(i)])),
        )
    }

    pub fn to_json(&self) -> Value {
        let comps: Vec<Value> = self
            .components()
            .into_iter()
            .map(|(rep, members)| {
                json!({
                    "representative": rep.to_string(),
                    "members": members.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({ "nodes": self.node_count(), "edges": self.edges.len(), "components": comps })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(i: u32) -> Term {
        Term::null(i)
    }

    #[test]
    fn representative_prefers_constant_then_oldest_null() {
        let mut g = UnificationGraph::new();
        assert_eq!(g.add_edge(n(4), n(2)), Ok(true));
        assert_eq!(g.find(n(4)), n(2));
        assert_eq!(g.add_edge(n(7), Term::constant("b")), Ok(true));
        assert_eq!(g.add_edge(n(4), n(7)), Ok(true));
        assert_eq!(g.find(n(2)), Term::constant("b"));
        assert_eq!(g.add_edge(n(2), n(7)), Ok(false));
        let h = g.resolution();
        assert!(h.is_idempotent());
        assert_eq!(h.len(), 3);
    }

    #[test]
    fn second_constant_clashes() {
        let mut g = UnificationGraph::new();
        g.add_edge(n(1), Term::constant("b")).unwrap();
        let e = g.add_edge(n(1), Term::constant("c")).unwrap_err();
        assert_eq!(e, Clash { left: Term::constant("b"), right: Term::constant("c") });
    }
}
