use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::gold::GoldAnnotation;
use super::matching::{align_components, surface, AlignMethod, NormalizedMatch, SimilarityMatch, TextMatcher};
use super::metrics::{
    class_report, component_counts, relation_agreement, relation_counts, span_counts, ClassCounts, ClassReport,
    Mention, RelationCounts, RelationReport, SpanMode,
};
use super::{Counts, EvalError, Prf};
use crate::graph::{role_mapping, ArgumentGraph, ComponentKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSuite {
    /// Span identification, conclusion accuracy and relation accuracy.
    Internal,
    /// Span identification, component classification and relation
    /// classification against scheme labels.
    External,
}

impl std::str::FromStr for TaskSuite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "internal" => Ok(TaskSuite::Internal),
            "external" => Ok(TaskSuite::External),
            other => Err(format!("unknown task suite '{other}' (expected internal or external)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum ConclusionMatch {
    Normalized,
    Similarity { threshold: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub suite: TaskSuite,
    pub span_mode: SpanMode,
    pub alignment: AlignMethod,
    pub conclusion_match: ConclusionMatch,
}

impl EvalOptions {
    pub fn internal() -> Self {
        EvalOptions {
            suite: TaskSuite::Internal,
            span_mode: SpanMode::Normalized,
            alignment: AlignMethod::Similarity { threshold: 0.8 },
            conclusion_match: ConclusionMatch::Normalized,
        }
    }

    pub fn external() -> Self {
        EvalOptions {
            suite: TaskSuite::External,
            span_mode: SpanMode::Exact,
            alignment: AlignMethod::ExactSpan,
            conclusion_match: ConclusionMatch::Normalized,
        }
    }

    pub fn for_suite(suite: TaskSuite) -> Self {
        match suite {
            TaskSuite::Internal => Self::internal(),
            TaskSuite::External => Self::external(),
        }
    }
}

/// One gold document with its prediction, if any.
#[derive(Debug, Clone, Copy)]
pub struct EvalInput<'a> {
    pub id: &'a str,
    pub text: &'a str,
    pub gold: &'a GoldAnnotation,
    pub predicted: Option<&'a ArgumentGraph>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentReport {
    pub id: String,
    pub span: Counts,
    pub span_f1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conclusion_correct: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relation_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component_macro_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link_f1: Option<f64>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub missing_prediction: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskCounts {
    pub span: Counts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conclusion: Option<Counts>,
    /// Agreeing pairs / pairs over documents with at least two shared
    /// components, and the number of such documents.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relation_pairs: Option<(usize, usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<ClassCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relations: Option<RelationCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub options: EvalOptions,
    pub documents: usize,
    pub span: Prf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conclusion_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relation_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub component_cls: Option<ClassReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relation_cls: Option<RelationReport>,
    pub counts: TaskCounts,
    pub per_document: Vec<DocumentReport>,
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Plain-text summary, one metric per line.
    pub fn summary(&self) -> String {
        let mut lines = vec![
            format!("documents            {}", self.documents),
            format!("span P/R/F1          {:.4} / {:.4} / {:.4}", self.span.precision, self.span.recall, self.span.f1),
        ];
        if let Some(a) = self.conclusion_accuracy {
            lines.push(format!("conclusion accuracy  {a:.4}"));
        }
        match self.relation_accuracy {
            Some(a) => lines.push(format!("relation accuracy    {a:.4}")),
            None if self.options.suite == TaskSuite::Internal => {
                lines.push("relation accuracy    n/a (no document shares two components)".into())
            }
            None => {}
        }
        if let Some(c) = &self.component_cls {
            lines.push(format!("component F1 micro   {:.4}  macro {:.4}", c.micro_f1, c.macro_f1));
        }
        if let Some(l) = self.link_f1 {
            lines.push(format!("link F1              {l:.4}"));
        }
        if let Some(r) = &self.relation_cls {
            lines.push(format!("relation F1 micro    {:.4}  macro {:.4}", r.micro_f1, r.macro_f1));
        }
        for w in &self.warnings {
            lines.push(format!("warning: {w}"));
        }
        lines.join("\n") + "\n"
    }
}

fn mentions_of_graph(graph: &ArgumentGraph, text: &str) -> Vec<Mention> {
    graph
        .nodes()
        .filter(|c| c.kind == ComponentKind::Explicit)
        .map(|c| Mention { span: c.span, text: surface(text, c.span, &c.text).to_owned() })
        .collect()
}

fn mentions_of_gold(gold: &GoldAnnotation, text: &str) -> Vec<Mention> {
    gold.components
        .iter()
        .filter(|c| c.kind == ComponentKind::Explicit)
        .map(|c| Mention { span: c.span, text: surface(text, c.span, &c.text).to_owned() })
        .collect()
}

fn require_roles(input: &EvalInput<'_>) -> Result<(), EvalError> {
    for (i, c) in input.gold.components.iter().enumerate() {
        if c.kind == ComponentKind::Explicit && c.role.is_none() {
            return Err(EvalError::MissingField {
                document: input.id.to_owned(),
                field: format!("gold.components[{i}].role"),
            });
        }
    }
    Ok(())
}

/// Scores every document and pools the counts. Missing predictions are
/// scored as empty graphs and reported as warnings.
pub fn evaluate_corpus(inputs: &[EvalInput<'_>], options: &EvalOptions) -> Result<EvalReport, EvalError> {
    for input in inputs {
        input.gold.validate(input.text).map_err(|source| EvalError::Gold { document: input.id.to_owned(), source })?;
        if options.suite == TaskSuite::External {
            require_roles(input)?;
        }
    }

    let normalized = NormalizedMatch;
    let similar;
    let matcher: &dyn TextMatcher = match options.conclusion_match {
        ConclusionMatch::Normalized => &normalized,
        ConclusionMatch::Similarity { threshold } => {
            similar = SimilarityMatch { threshold };
            &similar
        }
    };

    let mut warnings = Vec::new();
    let mut counts = TaskCounts::default();
    let mut per_document = Vec::with_capacity(inputs.len());
    let mut conclusion = Counts::default();
    let mut pairs = (0usize, 0usize, 0usize);
    let mut components: ClassCounts = BTreeMap::new();
    let mut relations = RelationCounts::default();

    for input in inputs {
        let empty;
        let pred = match input.predicted {
            Some(g) => g,
            None => {
                warnings.push(format!("{}: no prediction, scored as empty", input.id));
                empty = ArgumentGraph::new(input.text);
                &empty
            }
        };
        let span = span_counts(
            &mentions_of_graph(pred, input.text),
            &mentions_of_gold(input.gold, input.text),
            options.span_mode,
        );
        counts.span = counts.span + span;
        let alignment = align_components(pred, input.gold, input.text, options.alignment);
        let mut doc = DocumentReport {
            id: input.id.to_owned(),
            span,
            span_f1: span.prf().f1,
            conclusion_correct: None,
            relation_accuracy: None,
            component_macro_f1: None,
            link_f1: None,
            missing_prediction: input.predicted.is_none(),
        };

        match options.suite {
            TaskSuite::Internal => {
                if let Some(g) = input.gold.conclusion {
                    let gc = &input.gold.components[g];
                    let gold_text = surface(input.text, gc.span, &gc.text);
                    let correct = pred
                        .conclusion()
                        .and_then(|id| pred.node(id))
                        .is_some_and(|c| matcher.matches(surface(input.text, c.span, &c.text), gold_text));
                    conclusion.gold += 1;
                    conclusion.predicted += usize::from(pred.conclusion().is_some());
                    conclusion.matched += usize::from(correct);
                    doc.conclusion_correct = Some(correct);
                }
                if let Some((agree, total)) = relation_agreement(pred, input.gold, &alignment) {
                    pairs.0 += agree;
                    pairs.1 += total;
                    pairs.2 += 1;
                    doc.relation_accuracy = Some(agree as f64 / total as f64);
                }
            }
            TaskSuite::External => {
                let pred_roles = match role_mapping(pred) {
                    Ok(roles) => roles,
                    Err(_) => {
                        if input.predicted.is_some() {
                            warnings.push(format!("{}: prediction has no conclusion, no roles assigned", input.id));
                        }
                        BTreeMap::new()
                    }
                };
                let doc_components = component_counts(&pred_roles, &input.gold.roles(), &alignment);
                doc.component_macro_f1 = Some(class_report(&doc_components).macro_f1);
                for (k, c) in doc_components {
                    let entry = components.entry(k).or_default();
                    *entry = *entry + c;
                }
                let doc_relations = relation_counts(pred, input.gold, &alignment);
                doc.link_f1 = Some(doc_relations.link.prf().f1);
                relations.add(&doc_relations);
            }
        }
        per_document.push(doc);
    }

    let mut report = EvalReport {
        options: *options,
        documents: inputs.len(),
        span: counts.span.prf(),
        conclusion_accuracy: None,
        relation_accuracy: None,
        component_cls: None,
        link_f1: None,
        relation_cls: None,
        counts,
        per_document,
        warnings,
    };
    match options.suite {
        TaskSuite::Internal => {
            report.conclusion_accuracy =
                Some(if conclusion.gold == 0 { 1.0 } else { conclusion.matched as f64 / conclusion.gold as f64 });
            report.relation_accuracy = (pairs.1 > 0).then(|| pairs.0 as f64 / pairs.1 as f64);
            report.counts.conclusion = Some(conclusion);
            report.counts.relation_pairs = Some(pairs);
        }
        TaskSuite::External => {
            let rel = relations.report();
            report.component_cls = Some(class_report(&components));
            report.link_f1 = Some(rel.link_f1);
            report.relation_cls = Some(rel);
            report.counts.components = Some(components);
            report.counts.relations = Some(relations);
        }
    }
    Ok(report)
}
