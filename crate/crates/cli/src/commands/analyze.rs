use std::path::PathBuf;

use clap::{Args, ValueEnum};
use tactic_reward::analytics::{analyze, untagged_turns};
use tactic_reward::dialogue::load_corpus;

use crate::setup::{open_input, write_all};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Json,
    Tsv,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Tagged corpus JSONL (`-` for stdin).
    #[arg(long = "in", default_value = "-")]
    pub input: PathBuf,
    /// Report path (`-` for stdout).
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: ReportFormat,
}

pub fn run(args: AnalyzeArgs) -> u8 {
    let loaded = match open_input(&args.input).and_then(load_corpus) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.input.display());
            return 1;
        }
    };
    if !loaded.diagnostics.is_empty() {
        for d in &loaded.diagnostics {
            eprintln!("error: {d}");
        }
        return 1;
    }
    let untagged = untagged_turns(&loaded.conversations);
    if !untagged.is_empty() {
        for (id, turn) in &untagged {
            eprintln!("error: conversation `{id}` turn {turn} is untagged");
        }
        eprintln!(
            "error: {} untagged supporter turn(s); run `tactic-reward tag` first",
            untagged.len()
        );
        return 1;
    }
    let report = match analyze(&loaded.conversations) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let text = match args.format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Tsv => report.to_tsv(),
    };
    match write_all(&args.out, text.as_bytes()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
