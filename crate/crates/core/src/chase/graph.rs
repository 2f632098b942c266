use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, HashSet};

use crate::model::{FactId, Merge, Substitution};
use crate::syntax::RuleId;

/// A derivation edge: `target` was produced by `rule` under `trigger` with
/// `source` among the matched body facts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub source: FactId,
    pub target: FactId,
    pub rule: RuleId,
    pub trigger: Substitution,
    /// Part of the warded forest.
    pub forest: bool,
}

/// Facts as nodes, derivation edges, the warded-forest subset of edges, and
/// memoized tracks.
#[derive(Clone, Debug, Default)]
pub struct ChaseGraph {
    nodes: Vec<FactId>,
    edges: Vec<Edge>,
    parent: BTreeMap<FactId, FactId>,
    track: RefCell<HashMap<FactId, FactId>>,
}

impl ChaseGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn add_node(&mut self, id: FactId) {
        self.nodes.push(id);
    }

    /// Adds the edges from every body fact to `target`. `forest_source`, if
    /// given, must be one of `sources` and becomes the forest parent.
    pub(crate) fn add_derivation(
        &mut self,
        sources: &[FactId],
        target: FactId,
        rule: RuleId,
        trigger: &Substitution,
        forest_source: Option<FactId>,
    ) {
        let mut done: HashSet<FactId> = HashSet::new();
        for &s in sources {
            if !done.insert(s) {
                continue;
            }
            let forest = forest_source == Some(s);
            self.edges.push(Edge { source: s, target, rule, trigger: trigger.clone(), forest });
        }
        if let Some(p) = forest_source {
            debug_assert!(!self.parent.contains_key(&target));
            self.parent.insert(target, p);
            let root = self.compute_track(p);
            self.track.borrow_mut().insert(target, root);
        }
    }

    pub fn nodes(&self) -> &[FactId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn forest_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.forest)
    }

    pub fn forest_parent(&self, id: FactId) -> Option<FactId> {
        self.parent.get(&id).copied()
    }

    /// Root of the warded-forest tree containing `id`.
    pub fn compute_track(&self, id: FactId) -> FactId {
        if let Some(t) = self.track.borrow().get(&id) {
            return *t;
        }
        let mut path = vec![id];
        let mut cur = id;
        let mut visited: HashSet<FactId> = HashSet::from([id]);
        let root = loop {
            if let Some(t) = self.track.borrow().get(&cur) {
                break *t;
            }
            match self.parent.get(&cur) {
                Some(&p) if visited.insert(p) => {
                    path.push(p);
                    cur = p;
                }
                _ => break cur,
            }
        };
        let mut memo = self.track.borrow_mut();
        for f in path {
            memo.insert(f, root);
        }
        root
    }

    /// Number of warded-forest trees.
    pub fn roots(&self) -> usize {
        self.nodes.iter().filter(|n| !self.parent.contains_key(n)).count()
    }

    /// Redirects edges after facts were merged; the kept node inherits the
    /// removed node's edges.
    pub(crate) fn contract(&mut self, merges: &[Merge]) {
        if merges.is_empty() {
            return;
        }
        let mut to: HashMap<FactId, FactId> = HashMap::new();
        for m in merges {
            to.insert(m.removed, m.kept);
        }
        let resolve = |mut id: FactId| {
            while let Some(&k) = to.get(&id) {
                id = k;
            }
            id
        };
        self.nodes.retain(|n| !to.contains_key(n));
        let old_parent = std::mem::take(&mut self.parent);
        for (child, p) in &old_parent {
            let (c, p) = (resolve(*child), resolve(*p));
            if c != p && !self.parent.contains_key(&c) {
                self.parent.insert(c, p);
            }
        }
        let mut seen = HashSet::new();
        let edges = std::mem::take(&mut self.edges);
        for mut e in edges {
            e.source = resolve(e.source);
            e.target = resolve(e.target);
            if e.source == e.target {
                continue;
            }
            e.forest = self.parent.get(&e.target) == Some(&e.source) && e.forest;
            let key = (e.source, e.target, e.rule, format!("{}", e.trigger));
            if seen.insert(key) {
                self.edges.push(e);
            }
        }
        self.track.borrow_mut().clear();
    }
}
