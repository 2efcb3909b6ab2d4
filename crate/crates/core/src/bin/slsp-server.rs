//! Reference SLSP server for MiniSpec projects.

use clap::Parser;
use slsp::server::{run_stdio, run_tcp, Features, ServerConfig, DEFAULT_BATCH_SIZE};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "slsp-server",
    version,
    about = "Specification language server for MiniSpec projects"
)]
struct Args {
    /// Serve one session over stdin/stdout (the default transport).
    #[arg(long)]
    stdio: bool,
    /// Listen on 127.0.0.1:<PORT> and serve one connection; 0 picks a free
    /// port, printed to stderr.
    #[arg(long, value_name = "PORT", conflicts_with = "stdio")]
    tcp: Option<u16>,
    /// Test cases per $/progress notification on streamed CT execution.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_BATCH_SIZE)]
    batch_size: usize,
    /// Write a JSONL transcript of all traffic to this file.
    #[arg(long, value_name = "FILE")]
    log: Option<PathBuf>,
    /// Enable only these features (comma-separated: pog,ct,tr,tp).
    #[arg(long, value_name = "LIST")]
    features: Option<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let features = match args.features.as_deref() {
        Some(list) => match Features::parse(list) {
            Ok(features) => features,
            Err(err) => {
                eprintln!("slsp-server: {err}");
                return ExitCode::from(2);
            }
        },
        None => Features::default(),
    };
    let config = ServerConfig {
        features,
        batch_size: args.batch_size.max(1),
        log: args.log,
    };
    let outcome = match args.tcp {
        Some(port) => run_tcp(port, &config),
        None => run_stdio(&config),
    };
    match outcome {
        Ok(code) => ExitCode::from(code.clamp(0, 255) as u8),
        Err(err) => {
            eprintln!("slsp-server: {err}");
            ExitCode::FAILURE
        }
    }
}
