use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use tactic_reward::reward::{ErrorBody, RewardEngine};

use crate::config::FileConfig;
use crate::setup::{
    build_quality, build_tagger, open_input, open_output, reward_config, PresetArgs, QualityArgs,
    TaggerArgs,
};

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Rollout groups, one `/score` request body per line (`-` for stdin).
    #[arg(long = "in", default_value = "-")]
    pub input: PathBuf,
    /// Breakdowns, one response per input line (`-` for stdout).
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    #[command(flatten)]
    pub preset: PresetArgs,
    #[command(flatten)]
    pub tagger: TaggerArgs,
    #[command(flatten)]
    pub quality: QualityArgs,
}

#[derive(Serialize)]
struct LineError {
    line: usize,
    #[serde(flatten)]
    body: ErrorBody,
}

fn engine(args: &ScoreArgs, file: &FileConfig) -> Result<RewardEngine, String> {
    let tagger = build_tagger(&args.tagger, file)?;
    let quality = build_quality(&args.quality, file)?;
    let cfg = reward_config(&args.preset, file)?;
    RewardEngine::new(tagger.tagger, quality.scorer, cfg).map_err(|e| e.to_string())
}

/// Blank lines are skipped; every other line yields exactly one output line.
/// Exit 1 if any line failed.
pub fn run(args: ScoreArgs, file: &FileConfig) -> u8 {
    let engine = match engine(&args, file) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let input = match open_input(&args.input) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.input.display());
            return 1;
        }
    };
    let mut out = match open_output(&args.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: cannot open {}: {e}", args.out.display());
            return 1;
        }
    };

    let mut failed = 0usize;
    for (i, line) in BufRead::lines(input).enumerate() {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", args.input.display());
                return 1;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let rendered = match engine.score_json(line.as_bytes()) {
            Ok(json) => json,
            Err(failure) => {
                failed += 1;
                eprintln!("error: line {}: {failure}", i + 1);
                serde_json::to_string(&LineError {
                    line: i + 1,
                    body: failure.to_body(),
                })
                .expect("error body serializes")
            }
        };
        if let Err(e) = writeln!(out, "{rendered}") {
            eprintln!("error: cannot write {}: {e}", args.out.display());
            return 1;
        }
    }
    if let Err(e) = out.flush() {
        eprintln!("error: cannot write {}: {e}", args.out.display());
        return 1;
    }
    if failed > 0 {
        eprintln!("error: {failed} line(s) failed");
        1
    } else {
        0
    }
}
