use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::gold::GoldAnnotation;
use crate::graph::{ArgumentGraph, ComponentKind, NodeId, Span};
use crate::text::{char_overlap_similarity, normalize_loose};

/// Decides whether two component texts denote the same component.
pub trait TextMatcher {
    fn matches(&self, predicted: &str, gold: &str) -> bool;
}

/// Equality after case folding and punctuation/whitespace normalization.
#[derive(Debug, Clone, Copy, Default)]
pub struct NormalizedMatch;

impl TextMatcher for NormalizedMatch {
    fn matches(&self, predicted: &str, gold: &str) -> bool {
        normalize_loose(predicted) == normalize_loose(gold)
    }
}

/// Character-overlap similarity at or above a threshold.
#[derive(Debug, Clone, Copy)]
pub struct SimilarityMatch {
    pub threshold: f64,
}

impl TextMatcher for SimilarityMatch {
    fn matches(&self, predicted: &str, gold: &str) -> bool {
        char_overlap_similarity(predicted, gold) >= self.threshold
    }
}

/// One assigned pair of a [`hungarian_match`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub pred: usize,
    pub gold: usize,
    pub similarity: f64,
}

/// Maximum-weight one-to-one assignment on a rectangular matrix
/// (`weights[row][col]`). Returns `min(rows, cols)` pairs sorted by row.
/// Shortest augmenting paths with potentials, O(n^2 m).
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if rows > cols {
        let transposed: Vec<Vec<f64>> = (0..cols).map(|c| (0..rows).map(|r| weights[r][c]).collect()).collect();
        let mut pairs: Vec<(usize, usize)> =
            max_weight_assignment(&transposed).into_iter().map(|(c, r)| (r, c)).collect();
        pairs.sort_unstable();
        return pairs;
    }

    // Minimize negated weights; arrays are 1-based with 0 as a sentinel.
    let cost = |i: usize, j: usize| -weights[i - 1][j - 1];
    let (n, m) = (rows, cols);
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut min_slack = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let slack = cost(i0, j) - u[i0] - v[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=m).filter(|&j| owner[j] != 0).map(|j| (owner[j] - 1, j - 1)).collect();
    pairs.sort_unstable();
    pairs
}

/// Optimal one-to-one pairing of predicted and gold texts by
/// character-overlap similarity.
pub fn hungarian_match<P: AsRef<str>, G: AsRef<str>>(predicted: &[P], gold: &[G]) -> Vec<Match> {
    let weights: Vec<Vec<f64>> = predicted
        .iter()
        .map(|p| gold.iter().map(|g| char_overlap_similarity(p.as_ref(), g.as_ref())).collect())
        .collect();
    max_weight_assignment(&weights)
        .into_iter()
        .map(|(pred, gold)| Match { pred, gold, similarity: weights[pred][gold] })
        .collect()
}

/// Sum of similarities in predicted-index order.
pub fn total_similarity(matches: &[Match]) -> f64 {
    matches.iter().map(|m| m.similarity).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum AlignMethod {
    /// Same character offsets.
    ExactSpan,
    /// Hungarian matching on surface text, keeping pairs at or above the
    /// threshold.
    Similarity { threshold: f64 },
}

/// Pairs of (predicted node, gold component index).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alignment {
    pub pairs: Vec<(NodeId, usize)>,
}

impl Alignment {
    pub fn gold_of(&self, node: NodeId) -> Option<usize> {
        self.pairs.iter().find(|(n, _)| *n == node).map(|&(_, g)| g)
    }

    pub fn aligned_gold(&self) -> BTreeSet<usize> {
        self.pairs.iter().map(|&(_, g)| g).collect()
    }
}

/// The source text under `span` when there is one, otherwise `text`.
pub fn surface<'a>(source: &'a str, span: Option<Span>, text: &'a str) -> &'a str {
    match span {
        Some(s) if s.is_valid_for(source.chars().count()) => s.slice(source),
        _ => text,
    }
}

/// Aligns the explicit nodes of `pred` with the explicit gold components.
pub fn align_components(pred: &ArgumentGraph, gold: &GoldAnnotation, source: &str, method: AlignMethod) -> Alignment {
    let nodes: Vec<_> = pred.nodes().filter(|c| c.kind == ComponentKind::Explicit).collect();
    let golds: Vec<usize> =
        (0..gold.components.len()).filter(|&i| gold.components[i].kind == ComponentKind::Explicit).collect();
    let mut pairs = Vec::new();
    match method {
        AlignMethod::ExactSpan => {
            let mut used = BTreeSet::new();
            for c in &nodes {
                let Some(span) = c.span else { continue };
                if let Some(&g) = golds.iter().find(|&&g| !used.contains(&g) && gold.components[g].span == Some(span)) {
                    used.insert(g);
                    pairs.push((c.id, g));
                }
            }
        }
        AlignMethod::Similarity { threshold } => {
            let pred_texts: Vec<&str> = nodes.iter().map(|c| surface(source, c.span, &c.text)).collect();
            let gold_texts: Vec<&str> =
                golds.iter().map(|&g| surface(source, gold.components[g].span, &gold.components[g].text)).collect();
            for m in hungarian_match(&pred_texts, &gold_texts) {
                if m.similarity >= threshold {
                    pairs.push((nodes[m.pred].id, golds[m.gold]));
                }
            }
        }
    }
    Alignment { pairs }
}
