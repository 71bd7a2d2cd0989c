//! Runs the pipeline on a text with scripted responses and writes the
//! resulting transcript.
//!
//! usage: record_script <text> <script.json> <out.jsonl> [preset]

use std::error::Error;
use std::fs;

use arggraph::llm::{RecordingBackend, ScriptedBackend, TranscriptMeta};
use arggraph::pipeline::{run_pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [text, script, out, rest @ ..] = &args[..] else {
        return Err("usage: record_script <text> <script.json> <out.jsonl> [preset]".into());
    };
    let preset = rest.first().map_or("full", String::as_str);
    let config = PipelineConfig::preset(preset).ok_or_else(|| format!("unknown preset {preset}"))?;
    let text = fs::read_to_string(text)?;
    let responses: Vec<String> = serde_json::from_str(&fs::read_to_string(script)?)?;
    let meta = TranscriptMeta {
        model_name: config.model.name.clone(),
        created_at: "2026-01-01T00:00:00Z".into(),
        pipeline_config_digest: config.digest(),
    };
    let backend = RecordingBackend::new(ScriptedBackend::new(responses), Some(meta));
    let (graph, trace) = run_pipeline(&backend, &text, &config)?;
    backend.save(out)?;
    eprintln!(
        "{} nodes, {} edges, {} calls, {} warnings",
        graph.node_count(),
        graph.edge_count(),
        trace.stage_records.len(),
        trace.warning_count()
    );
    Ok(())
}
