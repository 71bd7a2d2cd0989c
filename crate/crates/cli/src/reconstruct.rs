use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use anyhow::{anyhow, Context};
use arggraph::corpus::{load_textbook_corpus, Document};
use arggraph::llm::{ChatBackend, LiveBackend, RecordingBackend, ReplayBackend, Transcript, TranscriptMeta};
use arggraph::pipeline::{run_pipeline, PipelineConfig};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use crate::{display, ensure_dir, BackendMode, Failure, Outcome};

const LIVE_JOB_CAP: usize = 8;

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Text files (one document each, named by file stem) or corpus JSON files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Pipeline configuration (TOML).
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration: full, minimal or external.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, value_enum)]
    pub backend: BackendMode,
    /// Transcript to replay. Record mode always writes <out>/transcript.jsonl.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads. Defaults to the number of processors, at most 8 when
    /// calling a live endpoint.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Finished, but the trace carries warnings or notes.
    Degraded,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct DocStatus {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub calls: usize,
    pub warnings: usize,
    pub notes: Vec<String>,
    pub elapsed_ms: f64,
    pub stage_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub inputs: Vec<String>,
    pub config: Option<String>,
    pub preset: Option<String>,
    pub config_digest: String,
    pub backend: BackendMode,
    pub transcript: Option<String>,
    pub out_dir: String,
    pub jobs: usize,
    pub started_at: String,
    pub finished_at: String,
    pub documents: BTreeMap<String, DocStatus>,
    pub warnings: Vec<String>,
}

enum Backend {
    Live(LiveBackend),
    Replay(ReplayBackend),
    Record(RecordingBackend<LiveBackend>),
}

impl Backend {
    fn as_dyn(&self) -> &dyn ChatBackend {
        match self {
            Backend::Live(b) => b,
            Backend::Replay(b) => b,
            Backend::Record(b) => b,
        }
    }
}

fn load_config(args: &ReconstructArgs) -> Result<PipelineConfig, Failure> {
    let config = match (&args.config, &args.preset) {
        (Some(path), _) => PipelineConfig::load(path).map_err(Failure::config)?,
        (None, Some(name)) => PipelineConfig::preset(name)
            .ok_or_else(|| Failure::config(anyhow!("unknown preset '{name}' (expected full, minimal or external)")))?,
        (None, None) => PipelineConfig::full(),
    };
    config.validate().map_err(Failure::config)?;
    Ok(config)
}

fn safe_id(id: &str) -> bool {
    !id.is_empty() && id != "." && id != ".." && !id.contains(['/', '\\']) && id != "manifest" && id != "transcript"
}

fn load_inputs(paths: &[PathBuf]) -> Result<Vec<Document>, Failure> {
    let mut docs = Vec::new();
    for path in paths {
        if path.extension().is_some_and(|e| e == "json") {
            docs.extend(load_textbook_corpus(path).map_err(Failure::config)?);
        } else {
            let text = fs::read_to_string(path).with_context(|| display(path)).map_err(Failure::config)?;
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| Failure::config(anyhow!("{}: no file name", display(path))))?;
            docs.push(Document::new(id, text));
        }
    }
    let mut seen = BTreeSet::new();
    for doc in &docs {
        if !safe_id(&doc.id) {
            return Err(Failure::config(anyhow!("document id '{}' cannot be used as a file name", doc.id)));
        }
        if !seen.insert(doc.id.clone()) {
            return Err(Failure::config(anyhow!("document id '{}' appears twice in the inputs", doc.id)));
        }
    }
    Ok(docs)
}

fn open_backend(
    args: &ReconstructArgs,
    config: &PipelineConfig,
    warnings: &mut Vec<String>,
) -> Result<Backend, Failure> {
    match args.backend {
        BackendMode::Live | BackendMode::Record => {
            if args.backend == BackendMode::Record && args.transcript.is_some() {
                return Err(Failure::config(anyhow!(
                    "--transcript is for replay; record mode writes <out>/transcript.jsonl"
                )));
            }
            let live = LiveBackend::new(&config.endpoint).map_err(Failure::config)?;
            Ok(match args.backend {
                BackendMode::Live => Backend::Live(live),
                _ => Backend::Record(RecordingBackend::new(
                    live,
                    Some(TranscriptMeta {
                        model_name: config.model.name.clone(),
                        created_at: chrono::Utc::now().to_rfc3339(),
                        pipeline_config_digest: config.digest(),
                    }),
                )),
            })
        }
        BackendMode::Replay => {
            let path =
                args.transcript.as_ref().ok_or_else(|| Failure::config(anyhow!("replay mode needs --transcript")))?;
            let transcript = Transcript::load(path).with_context(|| display(path)).map_err(Failure::config)?;
            if let Some(meta) = &transcript.meta {
                if meta.pipeline_config_digest != config.digest() {
                    warnings.push(format!(
                        "transcript was recorded under configuration {}, this run uses {}",
                        meta.pipeline_config_digest,
                        config.digest()
                    ));
                }
            }
            Ok(Backend::Replay(ReplayBackend::new(&transcript)))
        }
    }
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| display(path))
}

fn reconstruct_one(backend: &dyn ChatBackend, doc: &Document, config: &PipelineConfig, out: &Path) -> DocStatus {
    let started = Instant::now();
    let result = run_pipeline(backend, &doc.text, config).map_err(anyhow::Error::from).and_then(|(graph, trace)| {
        write(&out.join(format!("{}.graph.json", doc.id)), &graph.to_json())?;
        write(&out.join(format!("{}.trace.json", doc.id)), &trace.to_json())?;
        Ok(trace)
    });
    let elapsed_ms = started.elapsed().as_secs_f64() * 1000.0;
    match result {
        Ok(trace) => DocStatus {
            status: if trace.is_clean() { Status::Ok } else { Status::Degraded },
            error: None,
            calls: trace.stage_records.len(),
            warnings: trace.warning_count(),
            notes: trace.notes.clone(),
            elapsed_ms,
            stage_ms: trace.timings.iter().map(|(stage, d)| (stage.clone(), d.as_secs_f64() * 1000.0)).collect(),
        },
        Err(e) => DocStatus {
            status: Status::Failed,
            error: Some(crate::describe(&e)),
            calls: 0,
            warnings: 0,
            notes: Vec::new(),
            elapsed_ms,
            stage_ms: BTreeMap::new(),
        },
    }
}

pub fn run(args: ReconstructArgs) -> Outcome {
    let started_at = chrono::Utc::now().to_rfc3339();
    let config = load_config(&args)?;
    let docs = load_inputs(&args.inputs)?;
    let mut warnings = Vec::new();
    let backend = open_backend(&args, &config, &mut warnings)?;
    let jobs = match args.jobs {
        Some(0) => return Err(Failure::config(anyhow!("--jobs must be at least 1"))),
        Some(n) => n,
        None => {
            let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
            if args.backend == BackendMode::Replay {
                cpus
            } else {
                cpus.min(LIVE_JOB_CAP)
            }
        }
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    ensure_dir(&args.out)?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(Failure::hard)?;
    let (sender, receiver) = mpsc::channel::<(String, DocStatus)>();
    let chat = backend.as_dyn();
    pool.install(|| {
        docs.par_iter().for_each_with(sender, |tx, doc| {
            let status = reconstruct_one(chat, doc, &config, &args.out);
            tx.send((doc.id.clone(), status)).expect("manifest collector is alive");
        });
    });
    let documents: BTreeMap<String, DocStatus> = receiver.into_iter().collect();

    let mut transcript_path = args.transcript.as_ref().map(|p| display(p));
    if let Backend::Record(recorder) = backend {
        let (_, mut transcript) = recorder.into_inner();
        transcript.entries.sort_by(|a, b| a.digest.cmp(&b.digest));
        let path = args.out.join("transcript.jsonl");
        transcript.save(&path).map_err(|e| Failure::hard(anyhow!("{}: {e}", display(&path))))?;
        transcript_path = Some(display(&path));
    }

    let failed = documents.values().filter(|d| d.status == Status::Failed).count();
    for (id, doc) in &documents {
        match &doc.error {
            Some(e) => println!("{id}: failed: {e}"),
            None => println!("{id}: {:?} ({} calls, {} warnings)", doc.status, doc.calls, doc.warnings),
        }
    }
    let manifest = RunManifest {
        inputs: args.inputs.iter().map(|p| display(p)).collect(),
        config: args.config.as_ref().map(|p| display(p)),
        preset: args.preset.clone(),
        config_digest: config.digest(),
        backend: args.backend,
        transcript: transcript_path,
        out_dir: display(&args.out),
        jobs,
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        documents,
        warnings,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(Failure::hard)? + "\n";
    write(&args.out.join("manifest.json"), &json).map_err(Failure::hard)?;
    Ok(if failed == 0 { 0 } else { 1 })
}
