//! DOT output for argument graphs.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::graph::{ArgumentGraph, Component, ComponentKind, Polarity};

/// Fill and font colors of a component node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodePaint {
    pub fill: String,
    pub font: String,
}

impl NodePaint {
    fn new(fill: &str, font: &str) -> Self {
        NodePaint { fill: fill.into(), font: font.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramStyle {
    pub explicit: NodePaint,
    pub implicit: NodePaint,
    pub conclusion: NodePaint,
    pub linked_join_color: String,
    pub undercut_join_color: String,
    /// Diameter of join points, in inches.
    pub join_size: f64,
    pub support_color: String,
    pub attack_color: String,
    pub partial_attack_color: String,
    /// Maximum characters per label line; 0 disables wrapping.
    pub wrap_width: usize,
    pub rankdir: String,
    pub font: String,
}

impl Default for DiagramStyle {
    fn default() -> Self {
        DiagramStyle {
            explicit: NodePaint::new("black", "white"),
            implicit: NodePaint::new("gray", "black"),
            conclusion: NodePaint::new("blue", "white"),
            linked_join_color: "gray".into(),
            undercut_join_color: "red".into(),
            join_size: 0.15,
            support_color: "black".into(),
            attack_color: "red".into(),
            partial_attack_color: "red".into(),
            wrap_width: 28,
            rankdir: "BT".into(),
            font: "Helvetica".into(),
        }
    }
}

/// Greedy word wrap; words longer than `width` get a line of their own.
pub fn wrap(text: &str, width: usize) -> Vec<String> {
    if width == 0 {
        return vec![text.split_whitespace().collect::<Vec<_>>().join(" ")];
    }
    let mut lines = Vec::new();
    let mut line = String::new();
    for word in text.split_whitespace() {
        let needed = line.chars().count() + usize::from(!line.is_empty()) + word.chars().count();
        if !line.is_empty() && needed > width {
            lines.push(std::mem::take(&mut line));
        }
        if !line.is_empty() {
            line.push(' ');
        }
        line.push_str(word);
    }
    if !line.is_empty() || lines.is_empty() {
        lines.push(line);
    }
    lines
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn node_line(node: &Component, is_conclusion: bool, style: &DiagramStyle) -> String {
    let name = format!("n{}", node.id.0);
    let join = |color: &str| {
        format!(
            "  {name} [label=\"\", shape=point, width={size}, height={size}, color={c}, fillcolor={c}];",
            size = style.join_size,
            c = quote(color)
        )
    };
    match node.kind {
        ComponentKind::LinkedJoin => join(&style.linked_join_color),
        ComponentKind::UndercutJoin => join(&style.undercut_join_color),
        ComponentKind::Explicit | ComponentKind::Implicit => {
            let paint = if is_conclusion {
                &style.conclusion
            } else if node.kind == ComponentKind::Implicit {
                &style.implicit
            } else {
                &style.explicit
            };
            let mut label = node.label.clone().unwrap_or_else(|| node.id.0.to_string());
            for line in wrap(&node.text, style.wrap_width) {
                label.push('\n');
                label.push_str(&line);
            }
            format!(
                "  {name} [label={}, fillcolor={}, fontcolor={}];",
                quote(&label),
                quote(&paint.fill),
                quote(&paint.font)
            )
        }
    }
}

/// DOT text with nodes in id order and edges in (source, target) order.
pub fn to_dot(graph: &ArgumentGraph, style: &DiagramStyle) -> String {
    let mut out = String::from("digraph argument {\n");
    let _ = writeln!(out, "  rankdir={};", style.rankdir);
    let _ = writeln!(out, "  node [shape=box, style=\"rounded,filled\", fontname={}];", quote(&style.font));
    let _ = writeln!(out, "  edge [arrowsize=0.8];");
    let mut ids: Vec<_> = graph.node_ids().collect();
    ids.sort();
    for id in &ids {
        let node = graph.node(*id).expect("listed node exists");
        out.push_str(&node_line(node, graph.conclusion() == Some(*id), style));
        out.push('\n');
    }
    let mut edges: Vec<_> = graph.edges().collect();
    edges.sort();
    for e in edges {
        let (color, extra) = match e.polarity {
            Polarity::Support => (&style.support_color, ""),
            Polarity::Attack => (&style.attack_color, ""),
            Polarity::PartialAttack => (&style.partial_attack_color, ", style=dashed"),
        };
        let _ = writeln!(out, "  n{} -> n{} [color={}{extra}];", e.source.0, e.target.0, quote(color));
    }
    out.push_str("}\n");
    out
}
