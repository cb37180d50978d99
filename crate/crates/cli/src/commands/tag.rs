use std::path::PathBuf;

use clap::Args;
use tactic_reward::dialogue::{load_corpus, write_corpus};
use tactic_reward::tagging::TagError;

use crate::config::FileConfig;
use crate::setup::{build_tagger, open_input, write_all, TaggerArgs};

#[derive(Debug, Args)]
pub struct TagArgs {
    /// Input corpus JSONL (`-` for stdin).
    #[arg(long = "in", default_value = "-")]
    pub input: PathBuf,
    /// Output corpus JSONL (`-` for stdout).
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    #[command(flatten)]
    pub tagger: TaggerArgs,
}

/// Exit 1 on I/O, schema or config errors; 2 on tagger failures. Nothing is
/// written unless every supporter turn was tagged.
pub fn run(args: TagArgs, file: &FileConfig) -> u8 {
    let built = match build_tagger(&args.tagger, file) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
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

    let mut corpus = loaded.conversations;
    let mut failures = 0usize;
    for conv in &mut corpus {
        for (i, turn) in conv.turns.iter_mut().enumerate() {
            if !turn.is_supporter() {
                continue;
            }
            match built.tagger.tag_turn(turn.text()) {
                Ok(tagged) => {
                    if let Err(e) = turn.set_tags(tagged.tags) {
                        eprintln!("error: conversation `{}` turn {i}: {e}", conv.id);
                        failures += 1;
                    }
                }
                Err(TagError::Requests(reqs)) => {
                    for r in &reqs {
                        eprintln!("error: conversation `{}` turn {i}: {r}", conv.id);
                    }
                    failures += 1;
                }
            }
        }
    }
    if failures > 0 {
        eprintln!("error: {failures} turn(s) could not be tagged; no output written");
        return 2;
    }

    let mut buf = Vec::new();
    write_corpus(&mut buf, &corpus).expect("writing to memory");
    match write_all(&args.out, &buf) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
