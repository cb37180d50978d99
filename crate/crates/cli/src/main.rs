mod commands;
mod config;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing_subscriber::filter::LevelFilter;

use commands::{analyze, filter, score, serve, tag};

#[derive(Debug, Parser)]
#[command(
    name = "tactic-reward",
    version,
    about = "Tactic-diversity reward engine and dialogue analytics"
)]
struct Cli {
    /// TOML config file; flags and environment variables take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Log verbosity on stderr: off, error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: LevelFilter,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tag every supporter turn of a corpus, overwriting existing tags.
    Tag(tag::TagArgs),
    /// Compute the tactic diagnostic report for a tagged corpus.
    Analyze(analyze::AnalyzeArgs),
    /// Score rollout groups offline, one request per line.
    Score(score::ScoreArgs),
    /// Keep multi-turn English emotional-support conversations.
    Filter(filter::FilterArgs),
    /// Run the HTTP scoring service.
    Serve(serve::ServeArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(cli.log_level)
        .with_target(false)
        .init();

    let file = match config::FileConfig::load(cli.config.as_deref()) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let code = match cli.command {
        Command::Tag(a) => tag::run(a, &file),
        Command::Analyze(a) => analyze::run(a),
        Command::Score(a) => score::run(a, &file),
        Command::Filter(a) => filter::run(a, &file),
        Command::Serve(a) => serve::run(a, &file),
    };
    ExitCode::from(code)
}
