use std::collections::BTreeMap;
use std::fmt::Write;

use super::graph::ChaseGraph;
use crate::model::{FactId, Instance};

#[derive(Clone, Debug, Default)]
pub struct DotOptions {
    /// Group nodes into one cluster per track.
    pub clusters: bool,
    /// Label edges with the rule that produced them.
    pub edge_labels: bool,
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders the chase graph in Graphviz DOT. Forest edges are solid, other
/// derivation edges dashed.
pub fn export_dot(graph: &ChaseGraph, inst: &Instance, opts: &DotOptions) -> String {
    let mut out = String::from("digraph chase {\n  node [shape=box, fontname=\"monospace\"];\n");
    let node = |out: &mut String, id: FactId, indent: &str| {
        let label = inst.get(id).map(|a| a.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{indent}n{} [label=\"{}\"];", id.0, escape(&label));
    };
    if opts.clusters {
        let mut tracks: BTreeMap<FactId, Vec<FactId>> = BTreeMap::new();
        for &id in graph.nodes() {
            tracks.entry(graph.compute_track(id)).or_default().push(id);
        }
        for (root, members) in tracks {
            let _ = writeln!(out, "  subgraph cluster_{} {{", root.0);
            let _ = writeln!(out, "    label=\"track {root}\";");
            for id in members {
                node(&mut out, id, "    ");
            }
            out.push_str("  }\n");
        }
    } else {
        for &id in graph.nodes() {
            node(&mut out, id, "  ");
        }
    }
    for e in graph.edges() {
        let mut attrs = vec![if e.forest { "style=solid, penwidth=2" } else { "style=dashed" }.to_string()];
        if opts.edge_labels {
            attrs.push(format!("label=\"{}\"", e.rule));
        }
        let _ = writeln!(out, "  n{} -> n{} [{}];", e.source.0, e.target.0, attrs.join(", "));
    }
    out.push_str("}\n");
    out
}
