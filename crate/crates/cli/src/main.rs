use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Result;
use clap::{Parser, Subcommand};
use lionex_cli::commands::{self, EvaluateArgs, ExplainArgs, ExplainOptions, GenerateArgs, TrainArgs};
use lionex_cli::error::{exit, exit_code, CliError};
use lionex_cli::server::{self, AppState};
use lionex_cli::workspace::Workspace;

#[derive(Parser)]
#[command(name = "lionex", version, about = "Latent-space explanations for neural predictors")]
struct Cli {
    /// Workspace directory; `LIONEX_WORKSPACE` takes precedence when set.
    #[arg(long, global = true, default_value = ".")]
    workspace: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a dataset manifest and its split CSVs.
    GenerateData(GenerateArgs),
    TrainPredictor(TrainArgs),
    /// Train a decoder from the predictor's latent space back to the inputs.
    TrainDecoder(TrainArgs),
    /// Latent feature statistics of the training split.
    ComputeStats,
    Explain(ExplainArgs),
    /// Metric report for one split.
    Evaluate(EvaluateArgs),
    /// Serve the JSON API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[command(flatten)]
        options: ExplainOptions,
    },
}

fn serve(ws: Workspace, host: &str, port: u16, options: ExplainOptions) -> Result<()> {
    let state = Arc::new(AppState::load(ws, options)?);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = match tokio::net::TcpListener::bind((host, port)).await {
            Ok(l) => l,
            Err(e) if e.kind() == std::io::ErrorKind::AddrInUse => {
                return Err(CliError::new(exit::PORT_BUSY, format!("port {port} is already in use")).into());
            }
            Err(e) => return Err(e.into()),
        };
        println!("listening on http://{}", listener.local_addr()?);
        std::io::stdout().flush()?;
        server::serve(listener, state).await?;
        Ok(())
    })
}

fn run(cli: Cli) -> Result<()> {
    let dir = std::env::var_os("LIONEX_WORKSPACE")
        .filter(|v| !v.is_empty())
        .map_or(cli.workspace, PathBuf::from);
    match cli.command {
        Command::GenerateData(args) => commands::generate_data(&dir, &args),
        Command::TrainPredictor(args) => commands::train_predictor(&Workspace::open(dir)?, &args),
        Command::TrainDecoder(args) => commands::train_decoder(&Workspace::open(dir)?, &args),
        Command::ComputeStats => commands::compute_stats(&Workspace::open(dir)?),
        Command::Explain(args) => commands::explain(&Workspace::open(dir)?, &args),
        Command::Evaluate(args) => commands::evaluate(&Workspace::open(dir)?, &args),
        Command::Serve { port, host, options } => serve(Workspace::open(dir)?, &host, port, options),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
