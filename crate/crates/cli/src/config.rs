//! The TOML config file and its merge with flags and environment.
//!
//! Precedence is flags, then environment variables, then the file, then
//! built-in defaults. Clap resolves the first two; the file fills the rest.
//!
//! ```toml
//! listen = "127.0.0.1:8080"
//! preset = "q_kl"              # q_kl | q_h | q_kl_h
//! max_concurrent_groups = 16
//! body_limit_bytes = 2097152
//! probe_interval_ms = 10000
//!
//! [reward]                     # any RewardConfig field, applied over the preset
//! token_target = 200
//! format_penalty_value = -1.0
//!
//! [tagger]
//! kind = "remote"              # keyword | remote
//! url = "http://localhost:9001/v1/completions"
//! timeout_ms = 30000
//! max_in_flight = 32
//! retries = 2
//! cache_dir = "/tmp/tagger-cache"
//!
//! [quality]
//! url = "http://localhost:9002/score"
//! # constant = 0.5            # offline stand-in for the quality model
//!
//! [judges]
//! urls = ["http://a/v1", "http://b/v1", "http://c/v1"]
//!
//! [filter]
//! min_turns = 3
//! ascii_threshold = 0.9
//! ```

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Deserialize;
use tactic_reward::http::ScoringClientConfig;
use tactic_reward::reward::{Preset, RewardOverrides};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaggerKind {
    Keyword,
    Remote,
}

/// Endpoint settings shared by the tagger and quality sections. Serde cannot
/// combine `flatten` with `deny_unknown_fields`, so sections repeat the fields
/// and hand out a `ClientSection` view.
#[derive(Debug, Clone, Default)]
pub struct ClientSection {
    pub timeout_ms: Option<u64>,
    pub max_in_flight: Option<usize>,
    pub retries: Option<u32>,
}

impl ClientSection {
    pub fn client_config(&self, url: String) -> ScoringClientConfig {
        let mut c = ScoringClientConfig::new(url);
        if let Some(v) = self.timeout_ms {
            c.timeout_ms = v;
        }
        if let Some(v) = self.max_in_flight {
            c.max_in_flight = v;
        }
        if let Some(v) = self.retries {
            c.retries = v;
        }
        c
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaggerSection {
    pub kind: Option<TaggerKind>,
    pub cache_dir: Option<PathBuf>,
    pub url: Option<String>,
    pub timeout_ms: Option<u64>,
    pub max_in_flight: Option<usize>,
    pub retries: Option<u32>,
}

impl TaggerSection {
    pub fn client(&self) -> ClientSection {
        ClientSection {
            timeout_ms: self.timeout_ms,
            max_in_flight: self.max_in_flight,
            retries: self.retries,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QualitySection {
    pub constant: Option<f64>,
    pub url: Option<String>,
    pub timeout_ms: Option<u64>,
    pub max_in_flight: Option<usize>,
    pub retries: Option<u32>,
}

impl QualitySection {
    pub fn client(&self) -> ClientSection {
        ClientSection {
            timeout_ms: self.timeout_ms,
            max_in_flight: self.max_in_flight,
            retries: self.retries,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JudgesSection {
    pub urls: Vec<String>,
    pub timeout_ms: Option<u64>,
    pub max_in_flight: Option<usize>,
    pub retries: Option<u32>,
}

impl JudgesSection {
    pub fn client(&self) -> ClientSection {
        ClientSection {
            timeout_ms: self.timeout_ms,
            max_in_flight: self.max_in_flight,
            retries: self.retries,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub min_turns: Option<usize>,
    pub ascii_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub listen: Option<String>,
    pub preset: Option<Preset>,
    pub max_concurrent_groups: Option<usize>,
    pub body_limit_bytes: Option<usize>,
    pub probe_interval_ms: Option<u64>,
    pub reward: RewardOverrides,
    pub tagger: TaggerSection,
    pub quality: QualitySection,
    pub judges: JudgesSection,
    pub filter: FilterSection,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}
