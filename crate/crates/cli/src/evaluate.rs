use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use arggraph::corpus::{load_graph, load_textbook_corpus, Document};
use arggraph::eval::{
    check_thresholds, evaluate_corpus, even_thresholds, surface, threshold_sweep, EvalError, EvalInput, EvalOptions,
    GoldAnnotation, SweepDocument, TaskSuite,
};
use arggraph::graph::{ArgumentGraph, ComponentKind};
use clap::Args;

use crate::{display, Failure, Outcome};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory holding <id>.graph.json predictions.
    #[arg(long)]
    pub pred: PathBuf,
    /// Gold corpus (JSON).
    #[arg(long)]
    pub gold: PathBuf,
    /// Task suite: internal (span, conclusion, relation accuracy) or
    /// external (span, component and relation classification).
    #[arg(long, default_value = "internal")]
    pub tasks: TaskSuite,
    /// Report path (JSON). The summary is always printed.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    /// Comma-separated, strictly increasing thresholds in [0, 1]. Defaults to
    /// 0, 0.05, ..., 1.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// CSV path. The curve is always printed.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Loaded {
    docs: Vec<(Document, GoldAnnotation)>,
    predictions: Vec<Option<ArgumentGraph>>,
    warnings: Vec<String>,
}

fn load(pred_dir: &Path, gold: &Path) -> Result<Loaded, Failure> {
    if !pred_dir.is_dir() {
        return Err(Failure::config(anyhow!("{}: not a directory", display(pred_dir))));
    }
    let corpus = load_textbook_corpus(gold).map_err(|e| Failure::config(anyhow!("{}: {e}", display(gold))))?;
    let mut warnings = Vec::new();
    let mut docs = Vec::new();
    let mut predictions = Vec::new();
    for mut doc in corpus {
        let Some(annotation) = doc.gold.take() else {
            warnings.push(format!("{}: no gold annotation, skipped", doc.id));
            continue;
        };
        let path = pred_dir.join(format!("{}.graph.json", doc.id));
        let prediction = if path.exists() { Some(load_graph(&path).map_err(Failure::hard)?) } else { None };
        predictions.push(prediction);
        docs.push((doc, annotation));
    }
    Ok(Loaded { docs, predictions, warnings })
}

pub fn run_evaluate(args: EvaluateArgs) -> Outcome {
    let loaded = load(&args.pred, &args.gold)?;
    let inputs: Vec<EvalInput<'_>> = loaded
        .docs
        .iter()
        .zip(&loaded.predictions)
        .map(|((doc, gold), pred)| EvalInput { id: &doc.id, text: &doc.text, gold, predicted: pred.as_ref() })
        .collect();
    let mut report = evaluate_corpus(&inputs, &EvalOptions::for_suite(args.tasks)).map_err(|e| match e {
        EvalError::MissingField { .. } | EvalError::Gold { .. } => Failure::config(e),
        other => Failure::hard(other),
    })?;
    let mut warnings = loaded.warnings;
    warnings.append(&mut report.warnings);
    report.warnings = warnings;
    if let Some(out) = &args.out {
        fs::write(out, report.to_json()).with_context(|| display(out)).map_err(Failure::hard)?;
    }
    print!("{}", report.summary());
    Ok(0)
}

fn texts(graph: Option<&ArgumentGraph>, text: &str) -> Vec<String> {
    graph.map_or_else(Vec::new, |g| {
        g.nodes()
            .filter(|c| c.kind == ComponentKind::Explicit)
            .map(|c| surface(text, c.span, &c.text).to_owned())
            .collect()
    })
}

pub fn run_sweep(args: SweepArgs) -> Outcome {
    let thresholds = args.thresholds.clone().unwrap_or_else(|| even_thresholds(21));
    check_thresholds(&thresholds).map_err(Failure::config)?;
    let loaded = load(&args.pred, &args.gold)?;
    let mut documents = Vec::with_capacity(loaded.docs.len());
    for ((doc, gold), pred) in loaded.docs.iter().zip(&loaded.predictions) {
        if pred.is_none() {
            eprintln!("warning: {}: no prediction, scored as empty", doc.id);
        }
        documents.push(SweepDocument {
            predicted: texts(pred.as_ref(), &doc.text),
            gold: gold
                .components
                .iter()
                .filter(|c| c.kind == ComponentKind::Explicit)
                .map(|c| surface(&doc.text, c.span, &c.text).to_owned())
                .collect(),
        });
    }
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let curve = threshold_sweep(&documents, &thresholds).map_err(Failure::config)?;
    let csv = curve.to_csv();
    if let Some(out) = &args.out {
        fs::write(out, &csv).with_context(|| display(out)).map_err(Failure::hard)?;
    }
    print!("{csv}");
    Ok(0)
}
