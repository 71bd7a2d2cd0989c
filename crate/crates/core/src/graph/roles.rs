use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ArgumentGraph, ComponentKind, GraphError, NodeId, Result};

/// Three-level component typology used by essay and abstract annotation schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    #[serde(alias = "MajorClaim", alias = "majorclaim")]
    MajorClaim,
    #[serde(alias = "Claim")]
    Claim,
    #[serde(alias = "Premise")]
    Premise,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::MajorClaim, Role::Claim, Role::Premise];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::MajorClaim => "major_claim",
            Role::Claim => "claim",
            Role::Premise => "premise",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maps graph depth onto scheme roles: the conclusion is the major claim,
/// anything attached to it (directly or through join nodes) is a claim and
/// every other explicit node is a premise. Join and implicit nodes get no role.
pub fn role_mapping(graph: &ArgumentGraph) -> Result<BTreeMap<NodeId, Role>> {
    let conclusion = graph.conclusion().ok_or(GraphError::NoConclusion)?;
    let mut roles = BTreeMap::new();
    roles.insert(conclusion, Role::MajorClaim);

    // Walk backwards from the conclusion through join nodes only.
    let mut frontier = vec![conclusion];
    let mut seen_joins = Vec::new();
    while let Some(target) = frontier.pop() {
        for edge in graph.incoming(target) {
            let Some(source) = graph.node(edge.source) else { continue };
            if source.kind.is_join() {
                if !seen_joins.contains(&source.id) {
                    seen_joins.push(source.id);
                    frontier.push(source.id);
                }
            } else if source.kind == ComponentKind::Explicit && source.id != conclusion {
                roles.insert(source.id, Role::Claim);
            }
        }
    }

    for node in graph.nodes() {
        if node.kind == ComponentKind::Explicit {
            roles.entry(node.id).or_insert(Role::Premise);
        }
    }
    Ok(roles)
}
