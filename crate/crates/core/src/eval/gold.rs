use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ArgEdge, ArgumentGraph, ComponentKind, GraphError, NodeId, Polarity, Role, Span};

fn explicit() -> ComponentKind {
    ComponentKind::Explicit
}

fn is_explicit(kind: &ComponentKind) -> bool {
    *kind == ComponentKind::Explicit
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldComponent {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
    #[serde(default = "explicit", skip_serializing_if = "is_explicit")]
    pub kind: ComponentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
}

/// A relation between two gold components, by index. `undercut_of` names the
/// support relation whose inference an attack targets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldRelation {
    pub source: usize,
    pub target: usize,
    pub polarity: Polarity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undercut_of: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldAnnotation {
    pub components: Vec<GoldComponent>,
    #[serde(default)]
    pub relations: Vec<GoldRelation>,
    #[serde(default)]
    pub conclusion: Option<usize>,
}

/// A gold annotation problem, located by a field path such as
/// `relations[2].target`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}")]
pub struct GoldError {
    pub path: String,
    pub message: String,
}

fn fail(path: String, message: impl Into<String>) -> GoldError {
    GoldError { path, message: message.into() }
}

impl GoldAnnotation {
    pub fn validate(&self, text: &str) -> Result<(), GoldError> {
        let text_len = text.chars().count();
        let n = self.components.len();
        for (i, c) in self.components.iter().enumerate() {
            if c.kind.is_join() {
                return Err(fail(format!("components[{i}].kind"), "join nodes are not gold components"));
            }
            if let Some(span) = c.span {
                if !span.is_valid_for(text_len) {
                    return Err(fail(
                        format!("components[{i}].span"),
                        format!("[{}, {}) is empty or outside text of length {text_len}", span.start, span.end),
                    ));
                }
                if c.kind == ComponentKind::Implicit {
                    return Err(fail(format!("components[{i}].span"), "implicit components have no span"));
                }
            }
        }
        let mut pairs = BTreeSet::new();
        let mut undercut = BTreeSet::new();
        for (i, r) in self.relations.iter().enumerate() {
            if r.source >= n {
                return Err(fail(format!("relations[{i}].source"), format!("index {} out of range", r.source)));
            }
            if r.target >= n {
                return Err(fail(format!("relations[{i}].target"), format!("index {} out of range", r.target)));
            }
            if r.source == r.target {
                return Err(fail(format!("relations[{i}]"), "relation from a component to itself"));
            }
            if !pairs.insert((r.source, r.target)) {
                return Err(fail(format!("relations[{i}]"), "duplicate relation"));
            }
            if let Some(j) = r.undercut_of {
                let inference = self
                    .relations
                    .get(j)
                    .ok_or_else(|| fail(format!("relations[{i}].undercut_of"), format!("index {j} out of range")))?;
                if !r.polarity.is_attack()
                    || inference.polarity != Polarity::Support
                    || inference.target != r.target
                    || inference.source == r.source
                {
                    return Err(fail(
                        format!("relations[{i}].undercut_of"),
                        "an undercut is an attack on the target of a support relation",
                    ));
                }
                if !undercut.insert(j) {
                    return Err(fail(format!("relations[{i}].undercut_of"), "inference undercut twice"));
                }
            }
        }
        if let Some(c) = self.conclusion {
            if c >= n {
                return Err(fail("conclusion".into(), format!("index {c} out of range")));
            }
        }
        Ok(())
    }

    /// The annotation as a graph with nodes labeled `1..n` in component
    /// order. Undercut relations become undercut joins.
    pub fn to_graph(&self, text: &str) -> Result<ArgumentGraph, GraphError> {
        let mut graph = ArgumentGraph::new(text);
        let mut ids: Vec<NodeId> = Vec::with_capacity(self.components.len());
        for (i, c) in self.components.iter().enumerate() {
            ids.push(graph.add_labeled_component(c.text.clone(), c.kind, c.span, Some((i + 1).to_string()))?);
        }
        let node = |i: usize| ids.get(i).copied().ok_or(GraphError::Structure(format!("no component {i}")));
        for r in &self.relations {
            graph.add_edge(node(r.source)?, node(r.target)?, r.polarity)?;
        }
        for r in &self.relations {
            if let Some(j) = r.undercut_of {
                let inference = self.relations.get(j).ok_or(GraphError::Structure(format!("no relation {j}")))?;
                let edge = ArgEdge::new(node(inference.source)?, node(inference.target)?, inference.polarity);
                graph.insert_undercut(node(r.source)?, edge)?;
            }
        }
        if let Some(c) = self.conclusion {
            graph.set_conclusion(node(c)?)?;
        }
        Ok(graph)
    }

    pub fn roles(&self) -> Vec<Option<Role>> {
        self.components.iter().map(|c| c.role).collect()
    }
}
