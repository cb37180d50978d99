//! Building taggers, quality scorers and reward configs from flags and the
//! config file.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use tactic_reward::http::{CompletionClient, HttpCompletionClient};
use tactic_reward::reward::{
    ConstantQuality, HttpQualityScorer, Preset, QualityScorer, RewardConfig,
};
use tactic_reward::tagging::{CachedClient, KeywordTagger, RemoteTagger, TurnTagger};

use crate::config::{FileConfig, TaggerKind};

#[derive(Debug, Clone, Args)]
pub struct TaggerArgs {
    /// Tagger backend; defaults to remote when a tagger URL is known.
    #[arg(long, value_enum)]
    pub tagger: Option<TaggerKind>,
    /// Completion endpoint used by the remote tagger.
    #[arg(long, env = "TACTIC_REWARD_TAGGER_URL")]
    pub tagger_url: Option<String>,
    /// Directory caching remote tagger replies by prompt hash.
    #[arg(long, value_name = "DIR")]
    pub tagger_cache: Option<PathBuf>,
    /// Maximum concurrent tagger requests per turn.
    #[arg(long)]
    pub tagger_max_in_flight: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct QualityArgs {
    /// Quality-score endpoint.
    #[arg(long, env = "TACTIC_REWARD_QUALITY_URL")]
    pub quality_url: Option<String>,
    /// Use a fixed quality score instead of an endpoint (offline runs).
    #[arg(long)]
    pub quality_constant: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PresetArgs {
    /// Reward preset: q_kl, q_h or q_kl_h.
    #[arg(long, env = "TACTIC_REWARD_PRESET")]
    pub preset: Option<Preset>,
}

pub struct BuiltTagger {
    pub tagger: Arc<dyn TurnTagger>,
    pub url: Option<String>,
}

pub fn build_tagger(args: &TaggerArgs, file: &FileConfig) -> Result<BuiltTagger, String> {
    let url = args.tagger_url.clone().or_else(|| file.tagger.url.clone());
    let kind = args
        .tagger
        .or(file.tagger.kind)
        .unwrap_or(if url.is_some() {
            TaggerKind::Remote
        } else {
            TaggerKind::Keyword
        });
    match kind {
        TaggerKind::Keyword => Ok(BuiltTagger {
            tagger: Arc::new(KeywordTagger),
            url: None,
        }),
        TaggerKind::Remote => {
            let url = url.ok_or("the remote tagger needs --tagger-url (or [tagger] url)")?;
            let mut cfg = file.tagger.client().client_config(url.clone());
            if let Some(n) = args.tagger_max_in_flight {
                cfg.max_in_flight = n;
            }
            let max_in_flight = cfg.max_in_flight;
            let http = HttpCompletionClient::new(cfg).map_err(|e| e.to_string())?;
            let cache = args
                .tagger_cache
                .clone()
                .or_else(|| file.tagger.cache_dir.clone());
            let client: Arc<dyn CompletionClient> = match cache {
                Some(dir) => Arc::new(
                    CachedClient::new(http, &dir)
                        .map_err(|e| format!("tagger cache {}: {e}", dir.display()))?,
                ),
                None => Arc::new(http),
            };
            Ok(BuiltTagger {
                tagger: Arc::new(RemoteTagger::new(client, max_in_flight)),
                url: Some(url),
            })
        }
    }
}

pub struct BuiltQuality {
    pub scorer: Arc<dyn QualityScorer>,
    pub url: Option<String>,
}

/// A constant flag wins over any URL; otherwise flag/env URL, then the
/// file's URL, then the file's constant.
pub fn build_quality(args: &QualityArgs, file: &FileConfig) -> Result<BuiltQuality, String> {
    let constant = |c: f64| -> Result<BuiltQuality, String> {
        if !c.is_finite() {
            return Err(format!("quality constant must be finite, got {c}"));
        }
        Ok(BuiltQuality {
            scorer: Arc::new(ConstantQuality(c)),
            url: None,
        })
    };
    if let Some(c) = args.quality_constant {
        return constant(c);
    }
    if let Some(url) = args
        .quality_url
        .clone()
        .or_else(|| file.quality.url.clone())
    {
        let cfg = file.quality.client().client_config(url.clone());
        let scorer = HttpQualityScorer::new(cfg).map_err(|e| e.to_string())?;
        return Ok(BuiltQuality {
            scorer: Arc::new(scorer),
            url: Some(url),
        });
    }
    if let Some(c) = file.quality.constant {
        return constant(c);
    }
    Err("no quality source: pass --quality-url or --quality-constant".into())
}

/// Preset from flag/env, else file, else q_kl; then the file's overrides.
pub fn reward_config(args: &PresetArgs, file: &FileConfig) -> Result<RewardConfig, String> {
    let preset = args.preset.or(file.preset).unwrap_or(Preset::QualityKl);
    let cfg = RewardConfig::from_preset(preset).apply(&file.reward);
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

pub fn open_input(path: &Path) -> io::Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(BufReader::new(io::stdin())))
    } else {
        Ok(Box::new(BufReader::new(File::open(path)?)))
    }
}

pub fn open_output(path: &Path) -> io::Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(BufWriter::new(io::stdout())))
    } else {
        Ok(Box::new(BufWriter::new(File::create(path)?)))
    }
}

/// Write the whole output, reporting failures the way every command does.
pub fn write_all(path: &Path, contents: &[u8]) -> Result<(), String> {
    let mut out = open_output(path).map_err(|e| format!("cannot open {}: {e}", path.display()))?;
    out.write_all(contents)
        .and_then(|_| out.flush())
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}
