//! Command-line driver: batch reconstruction, evaluation, threshold sweeps
//! and diagrams.

mod diagram;
mod evaluate;
mod reconstruct;

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use reconstruct::{DocStatus, RunManifest, Status};

#[derive(Debug, Parser)]
#[command(name = "arggraph", version, about = "Reconstruct and evaluate argument graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reconstruct argument graphs from text files or corpus files.
    Reconstruct(reconstruct::ReconstructArgs),
    /// Score predicted graphs against a gold corpus.
    Evaluate(evaluate::EvaluateArgs),
    /// Mean F1 of Hungarian-matched components against similarity thresholds.
    Sweep(evaluate::SweepArgs),
    /// Write a graph as DOT, or render it with Graphviz.
    Diagram(diagram::DiagramArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendMode {
    Live,
    Replay,
    Record,
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    /// Per-document or I/O failure during a run.
    pub fn hard(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 1, error: error.into() }
    }

    /// Bad flags, configuration or inputs; nothing was run.
    pub fn config(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 2, error: error.into() }
    }

    /// A required external program is not installed.
    pub fn missing_tool(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 3, error: error.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&describe(&self.error))
    }
}

/// The error and its causes, skipping causes already quoted in the message
/// before them.
pub(crate) fn describe(error: &anyhow::Error) -> String {
    let mut out = error.to_string();
    for cause in error.chain().skip(1) {
        let text = cause.to_string();
        if !out.contains(&text) {
            out.push_str(": ");
            out.push_str(&text);
        }
    }
    out
}

pub type Outcome = Result<u8, Failure>;

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Reconstruct(args) => reconstruct::run(args),
        Command::Evaluate(args) => evaluate::run_evaluate(args),
        Command::Sweep(args) => evaluate::run_sweep(args),
        Command::Diagram(args) => diagram::run(args),
    };
    match result {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.code
        }
    }
}

pub(crate) fn display(path: &std::path::Path) -> String {
    path.display().to_string()
}

pub(crate) fn ensure_dir(dir: &PathBuf) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::hard(anyhow::anyhow!("{}: {e}", dir.display())))
}
