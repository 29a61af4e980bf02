//! Command-line interface of the `engine` binary.

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use conceptlens::synth::{generate_dump, SynthParams};

use crate::engine::{ComposeRequest, Engine};
use crate::error::{EngineError, Result};

#[derive(Debug, Parser)]
#[command(name = "engine", version, about = "Concept-based model comparison engine")]
pub struct Cli {
    /// Data directory holding models, concepts, explanations and the cache.
    #[arg(long, global = true, env = "ENGINE_DATA_DIR", default_value = "engine-data")]
    pub data_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Validate a dump directory and add it to the data directory.
    Ingest { dump: PathBuf },
    /// Write a synthetic dump directory.
    Synth(SynthArgs),
    /// Add a concept file.
    Concept { file: PathBuf },
    /// Compose an explanation from a config file and print its handle.
    Compose { file: PathBuf },
    /// Compute and cache every single-model payload and glyph series of an explanation.
    Precompute { explanation_id: String },
    /// Manage the payload cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum CacheAction {
    /// Delete every cached payload.
    Clear,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "synth")]
    pub model_id: String,
    #[arg(long, default_value_t = 32)]
    pub d: usize,
    #[arg(long, default_value_t = 4)]
    pub layers: u32,
    #[arg(long, default_value_t = 20)]
    pub words_per_pole: usize,
    /// Angle between the pole directions at layer 1, in degrees.
    #[arg(long, default_value_t = 90.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    /// Extra separation per layer, in degrees.
    #[arg(long, default_value_t = 0.0)]
    pub layer_drift: f64,
    /// Probability of class 0 for words of the first pole.
    #[arg(long, default_value_t = 0.5)]
    pub bias_a: f64,
    /// Probability of class 0 for words of the second pole.
    #[arg(long, default_value_t = 0.5)]
    pub bias_b: f64,
    #[arg(long, default_value_t = 10)]
    pub sentences_per_word: usize,
    #[arg(long)]
    pub no_predictions: bool,
    #[arg(long, default_value = "synthetic")]
    pub concept_name: String,
    /// Also write the generating concept file here.
    #[arg(long)]
    pub concept_out: Option<PathBuf>,
}

impl SynthArgs {
    pub fn params(&self) -> SynthParams {
        SynthParams {
            model_id: self.model_id.clone(),
            d: self.d,
            layers: self.layers,
            words_per_pole: self.words_per_pole,
            concept_name: self.concept_name.clone(),
            separation: self.separation,
            noise: self.noise,
            layer_drift: self.layer_drift,
            label_bias: [self.bias_a, self.bias_b],
            sentences_per_word: self.sentences_per_word,
            predictions: !self.no_predictions,
            seed: self.seed,
            ..SynthParams::default()
        }
    }
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| EngineError::io(path, e))
}

fn emit(out: &mut dyn Write, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    writeln!(out, "{text}").map_err(|e| EngineError::io("<stdout>", e))
}

/// Executes one command, writing machine-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Synth(args) => {
            let dump = generate_dump(&args.params())?;
            dump.write_to(&args.out)?;
            if let Some(path) = &args.concept_out {
                std::fs::write(path, dump.concept.to_json()).map_err(|e| EngineError::io(path, e))?;
            }
            emit(out, &serde_json::json!({ "out": args.out, "concept": dump.concept }))
        }
        Command::Serve { port, host } => serve(cli.data_dir, &host, port),
        command => {
            let engine = Arc::new(Engine::open(&cli.data_dir)?);
            match command {
                Command::Ingest { dump } => emit(out, &engine.ingest(&dump)?),
                Command::Concept { file } => emit(out, &engine.add_concept(&read(&file)?)?),
                Command::Compose { file } => {
                    let request: ComposeRequest = serde_json::from_str(&read(&file)?)
                        .map_err(|e| EngineError::BadRequest(format!("{}: {e}", file.display())))?;
                    emit(out, &engine.compose(request)?.0)
                }
                Command::Precompute { explanation_id } => emit(out, &engine.precompute(&explanation_id)?),
                Command::Cache { action: CacheAction::Clear } => {
                    emit(out, &serde_json::json!({ "removed": engine.cache().clear()? }))
                }
                Command::Synth(_) | Command::Serve { .. } => unreachable!("handled above"),
            }
        }
    }
}

fn serve(data_dir: PathBuf, host: &str, port: u16) -> Result<()> {
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| EngineError::BadRequest(format!("bad listen address {host}:{port}: {e}")))?;
    let engine = Arc::new(Engine::open(&data_dir)?);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| EngineError::io("<runtime>", e))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| EngineError::io(addr.to_string(), e))?;
        tracing::info!("serving {} on http://{addr}", data_dir.display());
        axum::serve(listener, crate::api::router(engine))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| EngineError::io(addr.to_string(), e))
    })
}

/// Entry point of the `engine` binary.
pub fn main() -> std::process::ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli, &mut std::io::stdout().lock()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_spec_style_commands() {
        let cli = Cli::try_parse_from(["engine", "serve", "--data-dir", "/tmp/x", "--port", "9000"]).unwrap();
        assert_eq!(cli.data_dir, PathBuf::from("/tmp/x"));
        assert!(matches!(cli.command, Command::Serve { port: 9000, .. }));
        let cli = Cli::try_parse_from(["engine", "synth", "--out", "d", "--seed", "7", "--d", "768", "--layers", "12"]).unwrap();
        let Command::Synth(args) = cli.command else { panic!("expected synth") };
        assert_eq!((args.seed, args.params().d, args.params().layers), (7, 768, 12));
        assert!(Cli::try_parse_from(["engine", "cache", "clear"]).is_ok());
    }
}
