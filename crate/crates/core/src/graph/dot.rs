use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use super::{AuditGraph, EdgeKind};
use crate::candidates::CandidateSet;

fn name(names: &[String], c: usize) -> String {
    names.get(c).cloned().unwrap_or_else(|| format!("Candidate {}", c + 1))
}

fn set_label(names: &[String], s: CandidateSet) -> String {
    s.iter().map(|c| name(names, c)).collect::<Vec<_>>().join(", ")
}

fn edge_label(names: &[String], k: EdgeKind) -> String {
    match k {
        EdgeKind::Winner(c) => format!("Elect {}", name(names, c)),
        EdgeKind::Loser(c) => format!("Eliminate {}", name(names, c)),
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering of `g`, one rank per layer.
pub fn export_dot(g: &AuditGraph, names: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph audit {{");
    let _ = writeln!(out, "  rankdir=TB;");
    let _ = writeln!(out, "  node [shape=box, fontsize=10];");
    for (depth, layer) in g.layers.iter().enumerate() {
        let _ = writeln!(out, "  subgraph depth_{depth} {{");
        let _ = writeln!(out, "    rank=same;");
        for &v in layer {
            let s = g.vertices[v].state;
            let mut label = format!("{}\\nW: {}", v + 1, escape(&set_label(names, s.winners)));
            if g.vertices[v].is_degenerate() {
                label.push_str("\\n(degenerate)");
            }
            let style = if g.is_terminal(v) { ", peripheries=2" } else { "" };
            let _ = writeln!(out, "    v{v} [label=\"{label}\"{style}];");
        }
        let _ = writeln!(out, "  }}");
    }
    for e in &g.edges {
        let style = if e.canonical { "" } else { ", style=dashed" };
        let _ = writeln!(
            out,
            "  v{} -> v{} [label=\"{}\"{style}];",
            e.from,
            e.to,
            escape(&edge_label(names, e.kind))
        );
    }
    out.push_str("}\n");
    out
}

/// JSON dump of `g` with per-state tallies and keep factors.
pub fn graph_to_json(g: &AuditGraph, names: &[String]) -> Value {
    let named = |m: &std::collections::BTreeMap<usize, f64>| -> Map<String, Value> {
        m.iter().map(|(&c, &t)| (name(names, c), json!(t))).collect()
    };
    let vertices: Vec<Value> = g
        .vertices
        .iter()
        .enumerate()
        .map(|(id, v)| {
            let mut row = json!({
                "id": id,
                "depth": v.depth,
                "hopefuls": v.state.hopefuls.iter().map(|c| name(names, c)).collect::<Vec<_>>(),
                "winners": v.state.winners.iter().map(|c| name(names, c)).collect::<Vec<_>>(),
                "terminal": g.is_terminal(id),
            });
            if let Some(it) = &v.tallies {
                row["classification"] = json!(it.solution.classification);
                row["quota"] = json!(it.solution.quota);
                row["keep_factors"] = Value::Object(named(&it.solution.factors));
                row["tallies"] = Value::Object(named(&it.hopefuls));
            }
            row
        })
        .collect();
    let edges: Vec<Value> = g
        .edges
        .iter()
        .map(|e| {
            json!({
                "from": e.from,
                "to": e.to,
                "label": edge_label(names, e.kind),
                "kind": e.kind,
                "canonical": e.canonical,
            })
        })
        .collect();
    json!({
        "seats": g.seats,
        "lam": g.lam,
        "layers": g.layers,
        "vertices": vertices,
        "edges": edges,
    })
}
