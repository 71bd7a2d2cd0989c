//! Scoring reconstructed graphs against gold annotations.

mod gold;
mod matching;
mod metrics;
mod report;
mod sweep;


use std::ops::Add;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gold::{GoldAnnotation, GoldComponent, GoldError, GoldRelation};
pub use matching::{
    align_components, hungarian_match, max_weight_assignment, surface, total_similarity, AlignMethod, Alignment, Match,
    NormalizedMatch, SimilarityMatch, TextMatcher,
};
pub use metrics::{
    class_report, collapsed_relations, component_classification, component_counts, conclusion_accuracy,
    relation_accuracy, relation_agreement, relation_classification, relation_counts, span_counts, span_prf,
    ClassCounts, ClassReport, Mention, RelationCounts, RelationReport, SpanMode,
};
pub use report::{
    evaluate_corpus, ConclusionMatch, DocumentReport, EvalInput, EvalOptions, EvalReport, TaskCounts, TaskSuite,
};
pub use sweep::{check_thresholds, even_thresholds, threshold_sweep, CurvePoint, SweepDocument, ThresholdCurve};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{predicted} predictions for {gold} gold documents")]
    InputMismatch { predicted: usize, gold: usize },
    #[error("document {document}: missing {field}")]
    MissingField { document: String, field: String },
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("document {document}: {source}")]
    Gold { document: String, source: GoldError },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts { matched: self.matched + o.matched, predicted: self.predicted + o.predicted, gold: self.gold + o.gold }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Counts {
    /// Precision, recall and F1. Both sides empty scores 1; an empty side
    /// against a non-empty one scores 0.
    pub fn prf(&self) -> Prf {
        if self.predicted == 0 && self.gold == 0 {
            return Prf { precision: 1.0, recall: 1.0, f1: 1.0 };
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(self.matched, self.predicted);
        let recall = ratio(self.matched, self.gold);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Prf { precision, recall, f1 }
    }
}
