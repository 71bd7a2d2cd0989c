//! Argument graph data model.
//!
//! An [`ArgumentGraph`] is a directed graph whose edges run from a premise to
//! the component it supports or attacks. Two kinds of empty helper nodes are
//! used to express structure that plain edges cannot:
//!
//! * a *linked join* collects premises that only support their target jointly;
//! * an *undercut join* sits inside an inference so that an attacker can target
//!   the inference itself instead of its conclusion.
//!
//! Every mutating operation keeps the graph acyclic unless the caller opts out
//! explicitly with [`ArgumentGraph::add_edge_allowing_cycles`].

mod algo;
mod json;
mod roles;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use algo::{reachable_from, transitive_reduction};
pub use json::{EdgeRecord, GraphDocument, GraphJsonError, NodeRecord, GRAPH_FORMAT_VERSION};
pub use roles::{role_mapping, Role};

/// Identifier of a node, unique within one graph and never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Explicit,
    Implicit,
    LinkedJoin,
    UndercutJoin,
}

impl ComponentKind {
    pub fn is_join(self) -> bool {
        matches!(self, ComponentKind::LinkedJoin | ComponentKind::UndercutJoin)
    }
}

/// Half-open range of character (code point) offsets into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "(usize, usize)", from = "(usize, usize)")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Checks `start < end <= text_len`.
    pub fn is_valid_for(&self, text_len: usize) -> bool {
        self.start < self.end && self.end <= text_len
    }

    /// The covered slice of `text`, counted in code points.
    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        let mut indices = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
        let start = indices.nth(self.start).unwrap_or(text.len());
        let end =
            if self.end > self.start { indices.nth(self.end - self.start - 1).unwrap_or(text.len()) } else { start };
        &text[start..end]
    }
}

impl From<Span> for (usize, usize) {
    fn from(span: Span) -> Self {
        (span.start, span.end)
    }
}

impl From<(usize, usize)> for Span {
    fn from((start, end): (usize, usize)) -> Self {
        Span { start, end }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub id: NodeId,
    pub text: String,
    pub kind: ComponentKind,
    pub span: Option<Span>,
    /// Display ordinal such as `"1"` or `"6'"`.
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Support,
    Attack,
    PartialAttack,
}

impl Polarity {
    pub fn is_attack(self) -> bool {
        matches!(self, Polarity::Attack | Polarity::PartialAttack)
    }

    /// Precedence used when two edges collapse into one: attack wins over
    /// partial attack, which wins over support.
    fn strength(self) -> u8 {
        match self {
            Polarity::Support => 0,
            Polarity::PartialAttack => 1,
            Polarity::Attack => 2,
        }
    }

    pub fn strongest(self, other: Polarity) -> Polarity {
        if other.strength() > self.strength() {
            other
        } else {
            self
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Support => "support",
            Polarity::Attack => "attack",
            Polarity::PartialAttack => "partial_attack",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArgEdge {
    pub source: NodeId,
    pub target: NodeId,
    pub polarity: Polarity,
}

impl ArgEdge {
    pub fn new(source: NodeId, target: NodeId, polarity: Polarity) -> Self {
        ArgEdge { source, target, polarity }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("span {start}..{end} is invalid for a text of {text_len} characters")]
    InvalidSpan { start: usize, end: usize, text_len: usize },
    #[error("{0:?} nodes must have empty text")]
    NonEmptyJoinText(ComponentKind),
    #[error("{0:?} nodes cannot carry a span")]
    UnexpectedSpan(ComponentKind),
    #[error("node {0} does not exist")]
    MissingEndpoint(NodeId),
    #[error("edge {from} -> {to} would close a cycle")]
    CycleWouldForm { from: NodeId, to: NodeId },
    #[error("edge {from} -> {to} already exists")]
    DuplicateEdge { from: NodeId, to: NodeId },
    #[error("self-loop on {0}")]
    SelfLoop(NodeId),
    #[error("conclusion {0} cannot have outgoing edges")]
    ConclusionNotSink(NodeId),
    #[error("edge {from} -> {to} would change the shape of a join node")]
    JoinEdge { from: NodeId, to: NodeId },
    #[error("join node {0} cannot be the target of a new join")]
    JoinTarget(NodeId),
    #[error("cannot merge an empty set of nodes")]
    EmptyMerge,
    #[error("join node {0} cannot be merged")]
    JoinNodeInMerge(NodeId),
    #[error("merging would create a cycle")]
    MergeCreatesCycle,
    #[error("merging would break graph structure: {0}")]
    MergeBreaksStructure(String),
    #[error("premise {premise} has no support edge to {target}")]
    PremiseNotAttached { premise: NodeId, target: NodeId },
    #[error("a linked join needs at least two premises")]
    FewerThanTwoPremises,
    #[error("inference {from} -> {to} does not exist")]
    MissingInference { from: NodeId, to: NodeId },
    #[error("inference {from} -> {to} is not a support relation")]
    InferenceNotSupport { from: NodeId, to: NodeId },
    #[error("{attacker} has no attack edge on {target}")]
    MissingAttackEdge { attacker: NodeId, target: NodeId },
    #[error("graph contains a cycle")]
    GraphCyclic,
    #[error("graph has no conclusion")]
    NoConclusion,
    #[error("invalid graph structure: {0}")]
    Structure(String),
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

/// Directed argument graph with an optional designated main conclusion.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ArgumentGraph {
    nodes: BTreeMap<NodeId, Component>,
    edges: BTreeMap<(NodeId, NodeId), Polarity>,
    conclusion: Option<NodeId>,
    source_text: String,
    text_len: usize,
    next_id: u32,
}

impl ArgumentGraph {
    pub fn new(source_text: impl Into<String>) -> Self {
        let source_text = source_text.into();
        let text_len = source_text.chars().count();
        ArgumentGraph { source_text, text_len, ..Default::default() }
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    /// Length of the source text in code points.
    pub fn text_len(&self) -> usize {
        self.text_len
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn node(&self, id: NodeId) -> Option<&Component> {
        self.nodes.get(&id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &Component> + '_ {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    /// Edges in ascending `(source, target)` order.
    pub fn edges(&self) -> impl Iterator<Item = ArgEdge> + '_ {
        self.edges.iter().map(|(&(source, target), &polarity)| ArgEdge { source, target, polarity })
    }

    pub fn edge(&self, source: NodeId, target: NodeId) -> Option<ArgEdge> {
        self.edges.get(&(source, target)).map(|&polarity| ArgEdge { source, target, polarity })
    }

    pub fn outgoing(&self, id: NodeId) -> impl Iterator<Item = ArgEdge> + '_ {
        self.edges.range((id, NodeId(0))..=(id, NodeId(u32::MAX))).map(|(&(source, target), &polarity)| ArgEdge {
            source,
            target,
            polarity,
        })
    }

    pub fn incoming(&self, id: NodeId) -> impl Iterator<Item = ArgEdge> + '_ {
        self.edges().filter(move |e| e.target == id)
    }

    pub fn out_degree(&self, id: NodeId) -> usize {
        self.outgoing(id).count()
    }

    pub fn in_degree(&self, id: NodeId) -> usize {
        self.incoming(id).count()
    }

    pub fn conclusion(&self) -> Option<NodeId> {
        self.conclusion
    }

    /// Designates the main conclusion. It must exist and have no outgoing edges.
    pub fn set_conclusion(&mut self, id: NodeId) -> Result<()> {
        self.require(id)?;
        if self.out_degree(id) > 0 {
            return Err(GraphError::ConclusionNotSink(id));
        }
        self.conclusion = Some(id);
        Ok(())
    }

    pub fn clear_conclusion(&mut self) {
        self.conclusion = None;
    }

    pub fn set_label(&mut self, id: NodeId, label: Option<String>) -> Result<()> {
        let node = self.nodes.get_mut(&id).ok_or(GraphError::MissingEndpoint(id))?;
        node.label = label;
        Ok(())
    }

    /// Replaces the text of a non-join node.
    pub fn set_text(&mut self, id: NodeId, text: impl Into<String>) -> Result<()> {
        let node = self.nodes.get_mut(&id).ok_or(GraphError::MissingEndpoint(id))?;
        let text = text.into();
        if node.kind.is_join() && !text.is_empty() {
            return Err(GraphError::NonEmptyJoinText(node.kind));
        }
        node.text = text;
        Ok(())
    }

    fn require(&self, id: NodeId) -> Result<&Component> {
        self.nodes.get(&id).ok_or(GraphError::MissingEndpoint(id))
    }

    fn check_component(&self, text: &str, kind: ComponentKind, span: Option<Span>) -> Result<()> {
        if kind.is_join() && !text.is_empty() {
            return Err(GraphError::NonEmptyJoinText(kind));
        }
        if let Some(span) = span {
            if kind != ComponentKind::Explicit {
                return Err(GraphError::UnexpectedSpan(kind));
            }
            if !span.is_valid_for(self.text_len) {
                return Err(GraphError::InvalidSpan { start: span.start, end: span.end, text_len: self.text_len });
            }
        }
        Ok(())
    }

    fn fresh_id(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    pub fn add_component(
        &mut self,
        text: impl Into<String>,
        kind: ComponentKind,
        span: Option<Span>,
    ) -> Result<NodeId> {
        self.add_labeled_component(text, kind, span, None)
    }

    pub fn add_labeled_component(
        &mut self,
        text: impl Into<String>,
        kind: ComponentKind,
        span: Option<Span>,
        label: Option<String>,
    ) -> Result<NodeId> {
        let text = text.into();
        self.check_component(&text, kind, span)?;
        let id = self.fresh_id();
        self.nodes.insert(id, Component { id, text, kind, span, label });
        Ok(id)
    }

    /// Restores a node under a caller-chosen id, used by deserialization.
    pub(crate) fn insert_component(&mut self, component: Component) -> Result<()> {
        self.check_component(&component.text, component.kind, component.span)?;
        if self.nodes.contains_key(&component.id) {
            return Err(GraphError::Structure(format!("duplicate node id {}", component.id)));
        }
        self.next_id = self.next_id.max(component.id.0 + 1);
        self.nodes.insert(component.id, component);
        Ok(())
    }

    fn check_new_edge(&self, source: NodeId, target: NodeId) -> Result<()> {
        self.require(source)?;
        self.require(target)?;
        if source == target {
            return Err(GraphError::SelfLoop(source));
        }
        if self.edges.contains_key(&(source, target)) {
            return Err(GraphError::DuplicateEdge { from: source, to: target });
        }
        if self.conclusion == Some(source) {
            return Err(GraphError::ConclusionNotSink(source));
        }
        Ok(())
    }

    /// Joins are wired by `insert_linked_join` and `insert_undercut`. Later
    /// edges may only add support premises to them.
    fn check_join_edge(&self, source: NodeId, target: NodeId, polarity: Polarity) -> Result<()> {
        self.check_new_edge(source, target)?;
        let into_join = self.nodes[&target].kind.is_join();
        if self.nodes[&source].kind.is_join() || (into_join && polarity != Polarity::Support) {
            return Err(GraphError::JoinEdge { from: source, to: target });
        }
        Ok(())
    }

    /// Adds `source -> target`, rejecting any edge that would close a cycle.
    pub fn add_edge(&mut self, source: NodeId, target: NodeId, polarity: Polarity) -> Result<()> {
        self.check_join_edge(source, target, polarity)?;
        if self.reaches(target, source) {
            return Err(GraphError::CycleWouldForm { from: source, to: target });
        }
        self.edges.insert((source, target), polarity);
        Ok(())
    }

    /// Adds an edge without the acyclicity check. Only for reconstructions run
    /// with DAG enforcement switched off.
    pub fn add_edge_allowing_cycles(&mut self, source: NodeId, target: NodeId, polarity: Polarity) -> Result<()> {
        self.check_join_edge(source, target, polarity)?;
        self.edges.insert((source, target), polarity);
        Ok(())
    }

    pub fn remove_edge(&mut self, source: NodeId, target: NodeId) -> Option<Polarity> {
        self.edges.remove(&(source, target))
    }

    /// True iff adding `source -> target` would close a cycle, i.e. `target`
    /// already reaches `source`.
    pub fn would_create_cycle(&self, source: NodeId, target: NodeId) -> Result<bool> {
        self.require(source)?;
        self.require(target)?;
        Ok(self.reaches(target, source))
    }

    fn reaches(&self, from: NodeId, to: NodeId) -> bool {
        if from == to {
            return true;
        }
        let mut seen = BTreeSet::from([from]);
        let mut stack = vec![from];
        while let Some(node) = stack.pop() {
            for edge in self.outgoing(node) {
                if edge.target == to {
                    return true;
                }
                if seen.insert(edge.target) {
                    stack.push(edge.target);
                }
            }
        }
        false
    }

    /// Kahn's algorithm, always taking the smallest ready id.
    pub fn topological_order(&self) -> Result<Vec<NodeId>> {
        let mut indegree: BTreeMap<NodeId, usize> = self.nodes.keys().map(|&id| (id, 0)).collect();
        for &(_, target) in self.edges.keys() {
            *indegree.get_mut(&target).expect("edge endpoint exists") += 1;
        }
        let mut ready: BTreeSet<NodeId> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&id, _)| id).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(id) = ready.pop_first() {
            order.push(id);
            for edge in self.outgoing(id) {
                let d = indegree.get_mut(&edge.target).expect("edge endpoint exists");
                *d -= 1;
                if *d == 0 {
                    ready.insert(edge.target);
                }
            }
        }
        if order.len() == self.nodes.len() {
            Ok(order)
        } else {
            Err(GraphError::GraphCyclic)
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_ok()
    }

    /// Replaces `ids` with one explicit component whose text joins the members
    /// in source order. Edges are rewired to the new node, internal edges are
    /// dropped and parallel edges keep the strongest polarity. The graph is
    /// left untouched on error.
    pub fn merge_components(&mut self, ids: &BTreeSet<NodeId>) -> Result<NodeId> {
        if ids.is_empty() {
            return Err(GraphError::EmptyMerge);
        }
        for &id in ids {
            if self.require(id)?.kind.is_join() {
                return Err(GraphError::JoinNodeInMerge(id));
            }
        }

        let mut members: Vec<&Component> = ids.iter().map(|id| &self.nodes[id]).collect();
        members.sort_by_key(|c| match c.span {
            Some(span) => (0, span.start, c.id),
            None => (1, 0, c.id),
        });
        let text = members.iter().map(|c| c.text.trim()).filter(|t| !t.is_empty()).collect::<Vec<_>>().join(" ");
        let span = members
            .iter()
            .filter_map(|c| c.span)
            .reduce(|a, b| Span { start: a.start.min(b.start), end: a.end.max(b.end) });
        let label = members.iter().find_map(|c| c.label.as_ref()).map(|l| format!("{l}'"));

        let mut candidate = self.clone();
        let merged = candidate.fresh_id();
        let remap = |id: NodeId| if ids.contains(&id) { merged } else { id };
        let mut edges: BTreeMap<(NodeId, NodeId), Polarity> = BTreeMap::new();
        for (&(s, t), &p) in &self.edges {
            let (s, t) = (remap(s), remap(t));
            if s == t {
                continue;
            }
            edges.entry((s, t)).and_modify(|q| *q = q.strongest(p)).or_insert(p);
        }
        for id in ids {
            candidate.nodes.remove(id);
        }
        candidate.nodes.insert(merged, Component { id: merged, text, kind: ComponentKind::Explicit, span, label });
        candidate.edges = edges;
        if let Some(c) = candidate.conclusion {
            candidate.conclusion = Some(remap(c));
        }

        if !candidate.is_acyclic() {
            return Err(GraphError::MergeCreatesCycle);
        }
        candidate.validate().map_err(|e| GraphError::MergeBreaksStructure(e.to_string()))?;
        *self = candidate;
        Ok(merged)
    }

    /// Routes the support edges `premise -> target` through a fresh linked
    /// join node.
    pub fn insert_linked_join(&mut self, premises: &BTreeSet<NodeId>, target: NodeId) -> Result<NodeId> {
        if premises.len() < 2 {
            return Err(GraphError::FewerThanTwoPremises);
        }
        if self.require(target)?.kind.is_join() {
            return Err(GraphError::JoinTarget(target));
        }
        for &premise in premises {
            self.require(premise)?;
            if self.edges.get(&(premise, target)) != Some(&Polarity::Support) {
                return Err(GraphError::PremiseNotAttached { premise, target });
            }
        }
        let join = self.fresh_id();
        self.nodes.insert(
            join,
            Component { id: join, text: String::new(), kind: ComponentKind::LinkedJoin, span: None, label: None },
        );
        for &premise in premises {
            self.edges.remove(&(premise, target));
            self.edges.insert((premise, join), Polarity::Support);
        }
        self.edges.insert((join, target), Polarity::Support);
        Ok(join)
    }

    /// Splits `inference` with an undercut join and redirects the attacker's
    /// edge on the inference target to that join.
    pub fn insert_undercut(&mut self, attacker: NodeId, inference: ArgEdge) -> Result<NodeId> {
        let ArgEdge { source, target, .. } = inference;
        if self.require(target)?.kind.is_join() {
            return Err(GraphError::JoinTarget(target));
        }
        let polarity =
            *self.edges.get(&(source, target)).ok_or(GraphError::MissingInference { from: source, to: target })?;
        if polarity != Polarity::Support {
            return Err(GraphError::InferenceNotSupport { from: source, to: target });
        }
        let attack = match self.edges.get(&(attacker, target)) {
            Some(&p) if p.is_attack() && attacker != source => p,
            _ => return Err(GraphError::MissingAttackEdge { attacker, target }),
        };
        let join = self.fresh_id();
        self.nodes.insert(
            join,
            Component { id: join, text: String::new(), kind: ComponentKind::UndercutJoin, span: None, label: None },
        );
        self.edges.remove(&(source, target));
        self.edges.remove(&(attacker, target));
        self.edges.insert((source, join), polarity);
        self.edges.insert((join, target), polarity);
        self.edges.insert((attacker, join), attack);
        Ok(join)
    }

    /// Removes a node with all incident edges. Clears the conclusion if it was
    /// the removed node.
    pub fn remove_node(&mut self, id: NodeId) -> Option<Component> {
        let node = self.nodes.remove(&id)?;
        self.edges.retain(|&(s, t), _| s != id && t != id);
        if self.conclusion == Some(id) {
            self.conclusion = None;
        }
        Some(node)
    }

    /// Checks every structural invariant except acyclicity.
    pub fn validate(&self) -> Result<()> {
        for c in self.nodes.values() {
            self.check_component(&c.text, c.kind, c.span)?;
        }
        for &(s, t) in self.edges.keys() {
            self.require(s)?;
            self.require(t)?;
            if s == t {
                return Err(GraphError::SelfLoop(s));
            }
        }
        if let Some(c) = self.conclusion {
            self.require(c)?;
            if self.out_degree(c) > 0 {
                return Err(GraphError::ConclusionNotSink(c));
            }
        }
        for c in self.nodes.values() {
            let incoming: Vec<ArgEdge> = self.incoming(c.id).collect();
            let out = self.out_degree(c.id);
            match c.kind {
                ComponentKind::LinkedJoin => {
                    if incoming.len() < 2 || incoming.iter().any(|e| e.polarity != Polarity::Support) {
                        return Err(GraphError::Structure(format!(
                            "linked join {} needs at least two support premises",
                            c.id
                        )));
                    }
                    if out != 1 {
                        return Err(GraphError::Structure(format!(
                            "linked join {} must have exactly one outgoing edge",
                            c.id
                        )));
                    }
                }
                ComponentKind::UndercutJoin => {
                    let attacks = incoming.iter().filter(|e| e.polarity.is_attack()).count();
                    if attacks != 1 || incoming.len() < 2 || out != 1 {
                        return Err(GraphError::Structure(format!(
                            "undercut join {} needs one attacker, an inference premise and one outgoing edge",
                            c.id
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Validates structure and acyclicity.
    pub fn validate_dag(&self) -> Result<()> {
        self.validate()?;
        self.topological_order().map(|_| ())
    }

    pub(crate) fn set_edges(&mut self, edges: BTreeMap<(NodeId, NodeId), Polarity>) {
        self.edges = edges;
    }

    pub(crate) fn edge_map(&self) -> &BTreeMap<(NodeId, NodeId), Polarity> {
        &self.edges
    }

    /// Builds a graph from parts, checking everything but acyclicity.
    pub fn from_parts(
        source_text: impl Into<String>,
        components: impl IntoIterator<Item = Component>,
        edges: impl IntoIterator<Item = ArgEdge>,
        conclusion: Option<NodeId>,
    ) -> Result<Self> {
        let mut graph = ArgumentGraph::new(source_text);
        for c in components {
            graph.insert_component(c)?;
        }
        for e in edges {
            graph.check_new_edge(e.source, e.target)?;
            graph.edges.insert((e.source, e.target), e.polarity);
        }
        if let Some(c) = conclusion {
            graph.require(c)?;
            graph.conclusion = Some(c);
        }
        graph.validate()?;
        Ok(graph)
    }
}
