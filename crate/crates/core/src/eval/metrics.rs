use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::gold::GoldAnnotation;
use super::matching::{Alignment, TextMatcher};
use super::{Counts, EvalError, Prf};
use crate::graph::{ArgumentGraph, ComponentKind, NodeId, Polarity, Role, Span};
use crate::text::normalize_loose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanMode {
    /// Identical character offsets.
    Exact,
    /// Identical covered text after case, whitespace and punctuation
    /// normalization.
    Normalized,
}

/// A component occurrence: its span, if known, and its surface text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub span: Option<Span>,
    pub text: String,
}

/// Matched/predicted/gold counts for span identification. Each gold mention
/// is matched at most once.
pub fn span_counts(predicted: &[Mention], gold: &[Mention], mode: SpanMode) -> Counts {
    let key = |m: &Mention| -> Option<String> {
        match mode {
            SpanMode::Exact => m.span.map(|s| format!("{}:{}", s.start, s.end)),
            SpanMode::Normalized => Some(normalize_loose(&m.text)),
        }
    };
    let mut pool: BTreeMap<String, usize> = BTreeMap::new();
    for k in gold.iter().filter_map(key) {
        *pool.entry(k).or_default() += 1;
    }
    let mut matched = 0;
    for k in predicted.iter().filter_map(key) {
        if let Some(left) = pool.get_mut(&k).filter(|n| **n > 0) {
            *left -= 1;
            matched += 1;
        }
    }
    Counts { matched, predicted: predicted.len(), gold: gold.len() }
}

pub fn span_prf(predicted: &[Mention], gold: &[Mention], mode: SpanMode) -> Prf {
    span_counts(predicted, gold, mode).prf()
}

/// Fraction of documents whose predicted conclusion matches the gold one.
/// A missing prediction counts as a miss; no documents gives 1.
pub fn conclusion_accuracy(
    predicted: &[Option<String>],
    gold: &[String],
    matcher: &dyn TextMatcher,
) -> Result<f64, EvalError> {
    if predicted.len() != gold.len() {
        return Err(EvalError::InputMismatch { predicted: predicted.len(), gold: gold.len() });
    }
    if gold.is_empty() {
        return Ok(1.0);
    }
    let hits = predicted.iter().zip(gold).filter(|(p, g)| p.as_deref().is_some_and(|p| matcher.matches(p, g))).count();
    Ok(hits as f64 / gold.len() as f64)
}

/// Relations between non-join nodes, reading each path through join nodes
/// as one relation. The path takes the first non-support polarity on it.
pub fn collapsed_relations(graph: &ArgumentGraph) -> BTreeMap<(NodeId, NodeId), Polarity> {
    let mut out = BTreeMap::new();
    for edge in graph.edges() {
        if graph.node(edge.source).is_none_or(|c| c.kind.is_join()) {
            continue;
        }
        let mut polarity = edge.polarity;
        let mut target = edge.target;
        let mut hops = 0;
        while graph.node(target).is_some_and(|c| c.kind.is_join()) && hops <= graph.node_count() {
            let Some(next) = graph.outgoing(target).next() else { break };
            if polarity == Polarity::Support {
                polarity = next.polarity;
            }
            target = next.target;
            hops += 1;
        }
        if graph.node(target).is_some_and(|c| !c.kind.is_join()) && target != edge.source {
            out.entry((edge.source, target)).or_insert(polarity);
        }
    }
    out
}

/// Agreement counts on link presence over unordered pairs of shared
/// components: `(agreeing pairs, pairs)`. `None` below two shared components.
pub fn relation_agreement(
    pred: &ArgumentGraph,
    gold: &GoldAnnotation,
    alignment: &Alignment,
) -> Option<(usize, usize)> {
    let shared: Vec<(NodeId, usize)> = {
        let mut pairs = alignment.pairs.clone();
        pairs.sort_by_key(|&(_, g)| g);
        pairs
    };
    if shared.len() < 2 {
        return None;
    }
    let pred_links: BTreeSet<(NodeId, NodeId)> = collapsed_relations(pred)
        .into_iter()
        .filter(|&((s, t), p)| {
            p == Polarity::Support
                && pred.node(s).is_some_and(|c| c.kind == ComponentKind::Explicit)
                && pred.node(t).is_some_and(|c| c.kind == ComponentKind::Explicit)
        })
        .map(|(pair, _)| pair)
        .collect();
    let gold_links: BTreeSet<(usize, usize)> =
        gold.relations.iter().filter(|r| r.polarity == Polarity::Support).map(|r| (r.source, r.target)).collect();

    let mut agree = 0;
    let mut total = 0;
    for (i, &(pa, ga)) in shared.iter().enumerate() {
        for &(pb, gb) in &shared[i + 1..] {
            total += 1;
            let pred_state = (pred_links.contains(&(pa, pb)), pred_links.contains(&(pb, pa)));
            let gold_state = (gold_links.contains(&(ga, gb)), gold_links.contains(&(gb, ga)));
            if pred_state == gold_state {
                agree += 1;
            }
        }
    }
    Some((agree, total))
}

/// Accuracy of premise-to-conclusion link presence over shared components;
/// `None` when fewer than two components are shared.
pub fn relation_accuracy(pred: &ArgumentGraph, gold: &GoldAnnotation, alignment: &Alignment) -> Option<f64> {
    relation_agreement(pred, gold, alignment).map(|(agree, total)| agree as f64 / total as f64)
}

/// Per-class counts keyed by class name.
pub type ClassCounts = BTreeMap<String, Counts>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub per_class: BTreeMap<String, Prf>,
}

/// Micro F1 over all classes and macro F1 over the classes that occur in gold.
/// Nothing predicted and nothing in gold scores 1 on both.
pub fn class_report(counts: &ClassCounts) -> ClassReport {
    let per_class: BTreeMap<String, Prf> = counts.iter().map(|(k, c)| (k.clone(), c.prf())).collect();
    let gold_classes: Vec<f64> = counts.iter().filter(|(_, c)| c.gold > 0).map(|(k, _)| per_class[k].f1).collect();
    let total = counts.values().fold(Counts::default(), |acc, c| acc + *c);
    let macro_f1 = if !gold_classes.is_empty() {
        gold_classes.iter().sum::<f64>() / gold_classes.len() as f64
    } else if total.predicted == 0 {
        1.0
    } else {
        0.0
    };
    let micro_f1 = total.prf().f1;
    ClassReport { micro_f1, macro_f1, per_class }
}

/// Role confusion counts. Aligned pairs with different roles are a false
/// positive for the predicted role and a false negative for the gold role;
/// unaligned predictions and gold components count on one side only.
pub fn component_counts(
    pred_roles: &BTreeMap<NodeId, Role>,
    gold_roles: &[Option<Role>],
    alignment: &Alignment,
) -> ClassCounts {
    let mut counts: ClassCounts = Role::ALL.iter().map(|r| (r.as_str().to_owned(), Counts::default())).collect();
    let mut bump = |role: Role, f: fn(&mut Counts)| f(counts.get_mut(role.as_str()).expect("all roles present"));
    for (&node, &role) in pred_roles {
        bump(role, |c| c.predicted += 1);
        if let Some(Some(g)) = alignment.gold_of(node).map(|g| gold_roles.get(g).copied().flatten()) {
            if g == role {
                bump(role, |c| c.matched += 1);
            }
        }
    }
    for role in gold_roles.iter().flatten() {
        bump(*role, |c| c.gold += 1);
    }
    counts
}

pub fn component_classification(
    pred_roles: &BTreeMap<NodeId, Role>,
    gold_roles: &[Option<Role>],
    alignment: &Alignment,
) -> ClassReport {
    class_report(&component_counts(pred_roles, gold_roles, alignment))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RelationCounts {
    /// Relation existence, labels ignored.
    pub link: Counts,
    /// Per polarity, a hit needing both the pair and the label to agree.
    pub labeled: ClassCounts,
}

impl RelationCounts {
    pub fn add(&mut self, other: &RelationCounts) {
        self.link = self.link + other.link;
        for (k, c) in &other.labeled {
            let entry = self.labeled.entry(k.clone()).or_default();
            *entry = *entry + *c;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub link_f1: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

impl RelationCounts {
    pub fn report(&self) -> RelationReport {
        let labeled = class_report(&self.labeled);
        RelationReport { link_f1: self.link.prf().f1, micro_f1: labeled.micro_f1, macro_f1: labeled.macro_f1 }
    }
}

/// Relation counts between explicit components, with join paths collapsed.
/// Relations touching implicit predicted nodes are left out: gold schemes
/// have no counterpart for them.
pub fn relation_counts(pred: &ArgumentGraph, gold: &GoldAnnotation, alignment: &Alignment) -> RelationCounts {
    let explicit = |id: NodeId| pred.node(id).is_some_and(|c| c.kind == ComponentKind::Explicit);
    let predicted: Vec<(Option<(usize, usize)>, Polarity)> = collapsed_relations(pred)
        .into_iter()
        .filter(|&((s, t), _)| explicit(s) && explicit(t))
        .map(|((s, t), p)| (alignment.gold_of(s).zip(alignment.gold_of(t)), p))
        .collect();
    let gold_map: BTreeMap<(usize, usize), Polarity> =
        gold.relations.iter().map(|r| ((r.source, r.target), r.polarity)).collect();

    let mut counts = RelationCounts {
        link: Counts { matched: 0, predicted: predicted.len(), gold: gold_map.len() },
        labeled: [Polarity::Support, Polarity::Attack, Polarity::PartialAttack]
            .iter()
            .map(|p| (p.as_str().to_owned(), Counts::default()))
            .collect(),
    };
    for polarity in gold_map.values() {
        counts.labeled.get_mut(polarity.as_str()).expect("all polarities").gold += 1;
    }
    let mut used = BTreeSet::new();
    for (pair, polarity) in predicted {
        counts.labeled.get_mut(polarity.as_str()).expect("all polarities").predicted += 1;
        let Some(pair) = pair else { continue };
        let Some(&gold_polarity) = gold_map.get(&pair) else { continue };
        if !used.insert(pair) {
            continue;
        }
        counts.link.matched += 1;
        if gold_polarity == polarity {
            counts.labeled.get_mut(polarity.as_str()).expect("all polarities").matched += 1;
        }
    }
    counts
}

pub fn relation_classification(pred: &ArgumentGraph, gold: &GoldAnnotation, alignment: &Alignment) -> RelationReport {
    relation_counts(pred, gold, alignment).report()
}
