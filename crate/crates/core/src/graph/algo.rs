use std::collections::{BTreeMap, BTreeSet};

use super::{ArgumentGraph, NodeId, Polarity, Result};

/// Nodes reachable from `start` (excluding `start` itself unless it lies on a
/// cycle) following only edges accepted by `follow`.
pub fn reachable_from(graph: &ArgumentGraph, start: NodeId, follow: impl Fn(Polarity) -> bool) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![start];
    while let Some(node) = stack.pop() {
        for edge in graph.outgoing(node) {
            if follow(edge.polarity) && seen.insert(edge.target) {
                stack.push(edge.target);
            }
        }
    }
    seen
}

/// Drops support edges between non-join nodes that are implied by a longer
/// support path. Attack edges and every edge touching a join node are kept.
pub fn transitive_reduction(graph: &ArgumentGraph) -> Result<ArgumentGraph> {
    let order = graph.topological_order()?;

    // Support descendants, filled in reverse topological order.
    let mut support_reach: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for &id in order.iter().rev() {
        let mut reach = BTreeSet::new();
        for edge in graph.outgoing(id) {
            if edge.polarity == Polarity::Support {
                reach.insert(edge.target);
                reach.extend(support_reach[&edge.target].iter().copied());
            }
        }
        support_reach.insert(id, reach);
    }

    let is_join = |id: NodeId| graph.node(id).is_some_and(|c| c.kind.is_join());
    let mut kept = BTreeMap::new();
    for (&(source, target), &polarity) in graph.edge_map() {
        let exempt = polarity != Polarity::Support || is_join(source) || is_join(target);
        let redundant = !exempt
            && graph.outgoing(source).any(|other| {
                other.target != target
                    && other.polarity == Polarity::Support
                    && support_reach[&other.target].contains(&target)
            });
        if !redundant {
            kept.insert((source, target), polarity);
        }
    }

    let mut reduced = graph.clone();
    reduced.set_edges(kept);
    Ok(reduced)
}
