use std::path::PathBuf;
use std::sync::Arc;

use clap::Args;
use serde::Serialize;
use tactic_reward::dialogue::{load_corpus, write_corpus, Conversation, Role};
use tactic_reward::http::{CompletionClient, HttpCompletionClient};
use tactic_reward::tagging::filter_emotional_support;

use crate::config::FileConfig;
use crate::setup::{open_input, write_all};

const DEFAULT_MIN_TURNS: usize = 3;
const DEFAULT_ASCII_THRESHOLD: f64 = 0.9;

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Input corpus JSONL (`-` for stdin).
    #[arg(long = "in", default_value = "-")]
    pub input: PathBuf,
    /// Retained conversations (`-` for stdout).
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Judge completion endpoint; give exactly three.
    #[arg(long = "judge-url", value_name = "URL")]
    pub judge_urls: Vec<String>,
    /// Per-conversation decisions as JSONL.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// Minimum number of seeker and supporter turns.
    #[arg(long)]
    pub min_turns: Option<usize>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum Status {
    Retained,
    Dropped,
    Error,
}

#[derive(Debug, Serialize)]
struct Decision<'a> {
    id: &'a str,
    status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdicts: Option<[bool; 3]>,
}

/// Declared language if present, else the share of ASCII among letters.
fn is_english(conv: &Conversation, threshold: f64) -> bool {
    let declared = conv
        .metadata
        .get("language")
        .or_else(|| conv.metadata.get("lang"));
    if let Some(lang) = declared {
        let l = lang.trim().to_ascii_lowercase();
        return l.starts_with("en") || l == "english";
    }
    let (ascii, letters) = conv
        .turns
        .iter()
        .flat_map(|t| t.text().chars())
        .filter(|c| c.is_alphabetic())
        .fold((0usize, 0usize), |(a, n), c| {
            (a + c.is_ascii() as usize, n + 1)
        });
    letters > 0 && ascii as f64 / letters as f64 >= threshold
}

fn judges(urls: &[String], file: &FileConfig) -> Result<Vec<Arc<dyn CompletionClient>>, String> {
    if urls.len() != 3 {
        return Err(format!(
            "exactly three judges are required, got {}",
            urls.len()
        ));
    }
    urls.iter()
        .map(|u| {
            let cfg = file.judges.client().client_config(u.clone());
            HttpCompletionClient::new(cfg)
                .map(|c| Arc::new(c.with_max_tokens(1)) as Arc<dyn CompletionClient>)
                .map_err(|e| format!("judge {u}: {e}"))
        })
        .collect()
}

/// Length and language checks run first and never call the judges. Exit 1
/// if any conversation could not be decided.
pub fn run(args: FilterArgs, file: &FileConfig) -> u8 {
    let urls = if args.judge_urls.is_empty() {
        file.judges.urls.clone()
    } else {
        args.judge_urls.clone()
    };
    let judges = match judges(&urls, file) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let min_turns = args
        .min_turns
        .or(file.filter.min_turns)
        .unwrap_or(DEFAULT_MIN_TURNS);
    let threshold = file
        .filter
        .ascii_threshold
        .unwrap_or(DEFAULT_ASCII_THRESHOLD);

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

    let mut kept = Vec::new();
    let mut decisions = Vec::new();
    let mut errors = 0usize;
    for conv in &loaded.conversations {
        let decision = if conv.turns.len() < min_turns {
            Decision {
                id: &conv.id,
                status: Status::Dropped,
                reason: Some(format!(
                    "{} turn(s), fewer than {min_turns}",
                    conv.turns.len()
                )),
                verdicts: None,
            }
        } else if !is_english(conv, threshold) {
            Decision {
                id: &conv.id,
                status: Status::Dropped,
                reason: Some("not English".into()),
                verdicts: None,
            }
        } else {
            let messages: Vec<(Role, &str)> =
                conv.turns.iter().map(|t| (t.role(), t.text())).collect();
            let panel = [&*judges[0], &*judges[1], &*judges[2]];
            match filter_emotional_support(&messages, panel) {
                Ok(o) if o.retained => {
                    kept.push(conv.clone());
                    Decision {
                        id: &conv.id,
                        status: Status::Retained,
                        reason: None,
                        verdicts: Some(o.verdicts),
                    }
                }
                Ok(o) => Decision {
                    id: &conv.id,
                    status: Status::Dropped,
                    reason: Some("judged not emotional support".into()),
                    verdicts: Some(o.verdicts),
                },
                Err(e) => {
                    errors += 1;
                    eprintln!("error: conversation `{}`: {e}", conv.id);
                    Decision {
                        id: &conv.id,
                        status: Status::Error,
                        reason: Some(e.to_string()),
                        verdicts: None,
                    }
                }
            }
        };
        decisions.push(decision);
    }

    let mut buf = Vec::new();
    write_corpus(&mut buf, &kept).expect("writing to memory");
    if let Err(e) = write_all(&args.out, &buf) {
        eprintln!("error: {e}");
        return 1;
    }
    if let Some(path) = &args.report {
        let mut lines = String::new();
        for d in &decisions {
            lines.push_str(&serde_json::to_string(d).expect("decision serializes"));
            lines.push('\n');
        }
        if let Err(e) = write_all(path, lines.as_bytes()) {
            eprintln!("error: {e}");
            return 1;
        }
    }
    if errors > 0 {
        eprintln!("error: {errors} conversation(s) could not be judged");
        1
    } else {
        0
    }
}
