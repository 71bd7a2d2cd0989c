use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = arggraph_cli::Cli::parse();
    ExitCode::from(arggraph_cli::run(cli))
}
