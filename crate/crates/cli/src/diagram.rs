use std::fs;
use std::io::ErrorKind;
use std::path::PathBuf;
use std::process::Command;

use anyhow::{anyhow, Context};
use arggraph::corpus::load_graph;
use arggraph::diagram::{to_dot, DiagramStyle};
use clap::{Args, ValueEnum};

use crate::{display, Failure, Outcome};

/// Environment variable naming the Graphviz executable (default `dot`).
pub const RENDERER_ENV: &str = "ARGGRAPH_DOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Dot,
    Svg,
    Png,
    Pdf,
}

#[derive(Debug, Args)]
pub struct DiagramArgs {
    /// Graph file (JSON).
    pub graph: PathBuf,
    /// Output path. DOT goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dot")]
    pub format: Format,
}

pub fn run(args: DiagramArgs) -> Outcome {
    let graph = load_graph(&args.graph).map_err(Failure::hard)?;
    let dot = to_dot(&graph, &DiagramStyle::default());
    let out = match (&args.out, args.format) {
        (None, Format::Dot) => {
            print!("{dot}");
            return Ok(0);
        }
        (None, _) => return Err(Failure::config(anyhow!("--out is required for image formats"))),
        (Some(out), _) => out,
    };
    let dot_path = if args.format == Format::Dot { out.clone() } else { out.with_extension("dot") };
    fs::write(&dot_path, &dot).with_context(|| display(&dot_path)).map_err(Failure::hard)?;
    if args.format == Format::Dot {
        return Ok(0);
    }

    let renderer = std::env::var(RENDERER_ENV).unwrap_or_else(|_| "dot".into());
    let kind = format!("-T{}", format!("{:?}", args.format).to_lowercase());
    match Command::new(&renderer).arg(kind).arg("-o").arg(out).arg(&dot_path).status() {
        Ok(status) if status.success() => Ok(0),
        Ok(status) => Err(Failure::hard(anyhow!("{renderer} exited with {status}"))),
        Err(e) if e.kind() == ErrorKind::NotFound => Err(Failure::missing_tool(anyhow!(
            "Graphviz renderer '{renderer}' not found; install Graphviz or render {} yourself \
             (DOT written to {})",
            display(out),
            display(&dot_path)
        ))),
        Err(e) => Err(Failure::hard(anyhow!("{renderer}: {e}"))),
    }
}
