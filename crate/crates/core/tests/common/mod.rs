#![allow(dead_code)]

pub mod dot;

use std::collections::BTreeSet;
use std::path::PathBuf;

use arggraph::graph::{ArgumentGraph, ComponentKind, NodeId, Polarity};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn teacher(name: &str) -> PathBuf {
    fixtures().join("teacher").join(name)
}

/// Name of a node that does not depend on its id: the label for components,
/// and for joins the kind, the sorted names of what flows in and the target.
fn signature(graph: &ArgumentGraph, id: NodeId, depth: usize) -> String {
    let node = graph.node(id).expect("node exists");
    if !node.kind.is_join() || depth > graph.node_count() {
        return format!("{:?}:{}", node.kind, node.label.clone().unwrap_or_default());
    }
    let mut inputs: Vec<String> =
        graph.incoming(id).map(|e| format!("{}/{:?}", signature(graph, e.source, depth + 1), e.polarity)).collect();
    inputs.sort();
    let targets: Vec<String> =
        graph.outgoing(id).map(|e| graph.node(e.target).and_then(|c| c.label.clone()).unwrap_or_default()).collect();
    format!("{:?}[{}]->{}", node.kind, inputs.join(","), targets.join(","))
}

pub type Canonical = (BTreeSet<String>, BTreeSet<(String, String, Polarity)>, Option<String>);

/// Structure of a graph with ids erased: node descriptions (kind, label,
/// text, span), edges between signatures, and the conclusion.
pub fn canonical(graph: &ArgumentGraph) -> Canonical {
    let nodes = graph
        .nodes()
        .map(|c| {
            let sig = signature(graph, c.id, 0);
            if c.kind.is_join() {
                sig
            } else {
                format!("{sig}|{}|{:?}", c.text, c.span)
            }
        })
        .collect();
    let edges =
        graph.edges().map(|e| (signature(graph, e.source, 0), signature(graph, e.target, 0), e.polarity)).collect();
    (nodes, edges, graph.conclusion().map(|c| signature(graph, c, 0)))
}

pub fn count_kind(graph: &ArgumentGraph, kind: ComponentKind) -> usize {
    graph.nodes().filter(|c| c.kind == kind).count()
}
