//! Records one transcript for a whole corpus, answering each document from
//! `<scripts>/<id>.json`.
//!
//! usage: record_corpus <corpus.json> <scripts dir> <out.jsonl> [preset]

use std::error::Error;
use std::fs;
use std::path::Path;

use arggraph::corpus::load_textbook_corpus;
use arggraph::llm::{RecordingBackend, ScriptedBackend, TranscriptMeta};
use arggraph::pipeline::{run_pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [corpus, scripts, out, rest @ ..] = &args[..] else {
        return Err("usage: record_corpus <corpus.json> <scripts dir> <out.jsonl> [preset]".into());
    };
    let preset = rest.first().map_or("full", String::as_str);
    let config = PipelineConfig::preset(preset).ok_or_else(|| format!("unknown preset {preset}"))?;
    let docs = load_textbook_corpus(Path::new(corpus))?;
    let mut responses = Vec::new();
    for doc in &docs {
        let path = Path::new(scripts).join(format!("{}.json", doc.id));
        let script: Vec<String> = serde_json::from_str(&fs::read_to_string(&path)?)?;
        responses.extend(script);
    }
    let meta = TranscriptMeta {
        model_name: config.model.name.clone(),
        created_at: "2026-01-01T00:00:00Z".into(),
        pipeline_config_digest: config.digest(),
    };
    let backend = RecordingBackend::new(ScriptedBackend::new(responses), Some(meta));
    for doc in &docs {
        let (graph, trace) = run_pipeline(&backend, &doc.text, &config)?;
        eprintln!(
            "{}: {} nodes, {} edges, {} calls, {} warnings, notes {:?}",
            doc.id,
            graph.node_count(),
            graph.edge_count(),
            trace.stage_records.len(),
            trace.warning_count(),
            trace.notes
        );
    }
    backend.save(out)?;
    Ok(())
}
