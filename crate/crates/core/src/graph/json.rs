//! Versioned JSON representation of an [`ArgumentGraph`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ArgEdge, ArgumentGraph, Component, ComponentKind, GraphError, NodeId, Polarity, Span};

pub const GRAPH_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub version: u32,
    pub source_text: String,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    pub conclusion: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: NodeId,
    pub text: String,
    pub kind: ComponentKind,
    pub span: Option<Span>,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub source: NodeId,
    pub target: NodeId,
    pub polarity: Polarity,
}

#[derive(Debug, Error)]
pub enum GraphJsonError {
    #[error("unsupported graph format version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed graph document: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("graph document violates schema: {0}")]
    SchemaViolation(#[from] GraphError),
}

impl From<&ArgumentGraph> for GraphDocument {
    fn from(graph: &ArgumentGraph) -> Self {
        GraphDocument {
            version: GRAPH_FORMAT_VERSION,
            source_text: graph.source_text().to_owned(),
            nodes: graph
                .nodes()
                .map(|c| NodeRecord {
                    id: c.id,
                    text: c.text.clone(),
                    kind: c.kind,
                    span: c.span,
                    label: c.label.clone(),
                })
                .collect(),
            edges: graph
                .edges()
                .map(|e| EdgeRecord { source: e.source, target: e.target, polarity: e.polarity })
                .collect(),
            conclusion: graph.conclusion(),
        }
    }
}

impl TryFrom<GraphDocument> for ArgumentGraph {
    type Error = GraphJsonError;

    fn try_from(doc: GraphDocument) -> Result<Self, Self::Error> {
        if doc.version != GRAPH_FORMAT_VERSION {
            return Err(GraphJsonError::UnsupportedVersion(doc.version));
        }
        let components = doc.nodes.into_iter().map(|n| Component {
            id: n.id,
            text: n.text,
            kind: n.kind,
            span: n.span,
            label: n.label,
        });
        let edges = doc.edges.into_iter().map(|e| ArgEdge::new(e.source, e.target, e.polarity));
        Ok(ArgumentGraph::from_parts(doc.source_text, components, edges, doc.conclusion)?)
    }
}

impl ArgumentGraph {
    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut out =
            serde_json::to_string_pretty(&GraphDocument::from(self)).expect("graph documents always serialize");
        out.push('\n');
        out
    }

    pub fn from_json(json: &str) -> Result<Self, GraphJsonError> {
        let value: serde_json::Value = serde_json::from_str(json)?;
        if let Some(version) = value.get("version").and_then(|v| v.as_u64()) {
            if version != u64::from(GRAPH_FORMAT_VERSION) {
                return Err(GraphJsonError::UnsupportedVersion(version as u32));
            }
        }
        let doc: GraphDocument = serde_json::from_value(value)?;
        ArgumentGraph::try_from(doc)
    }
}
