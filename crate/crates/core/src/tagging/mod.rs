//! Tactic tagging: prompt construction, reply parsing, the remote per-tactic
//! tagger client, the keyword fallback tagger and the emotional-support
//! filter panel.

mod cache;
mod filter;
mod keyword;
mod prompt;
mod remote;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::http::ClientError;
use crate::tactic::{TacticCounts, TacticId, TacticSet};

pub use cache::CachedClient;
pub use filter::{filter_emotional_support, FilterError, FilterOutcome};
pub use keyword::{keyword_tag_sentence, KeywordTagger};
pub use prompt::{
    build_filter_prompt, build_filter_snippet, build_tagger_prompt, parse_label,
    parse_score_in_range, parse_score_tag, render_template, TacticDefinition, VerdictError,
    FILTER_TEMPLATE, TAGGER_TEMPLATE,
};
pub use remote::{tag_turn_remote, RemoteTagger, TaggerVerdict};

/// Sentences of one turn with their tactic sets and per-tactic counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedTurn {
    pub sentences: Vec<String>,
    pub tags: Vec<TacticSet>,
    pub counts: TacticCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RequestFailureKind {
    Client(ClientError),
    Verdict(VerdictError),
}

impl fmt::Display for RequestFailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RequestFailureKind::Client(e) => e.fmt(f),
            RequestFailureKind::Verdict(e) => e.fmt(f),
        }
    }
}

/// A failed (sentence, tactic) scoring request.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestFailure {
    pub sentence: usize,
    pub tactic: TacticId,
    pub kind: RequestFailureKind,
}

impl fmt::Display for RequestFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sentence {} / {}: {}",
            self.sentence, self.tactic, self.kind
        )
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TagError {
    /// Failures ordered by (sentence, tactic).
    #[error("{} tagging request(s) failed; first: {}", .0.len(), .0[0])]
    Requests(Vec<RequestFailure>),
}

pub trait TurnTagger: Send + Sync {
    fn tag_turn(&self, text: &str) -> Result<TaggedTurn, TagError>;
}

impl<T: TurnTagger + ?Sized> TurnTagger for Arc<T> {
    fn tag_turn(&self, text: &str) -> Result<TaggedTurn, TagError> {
        (**self).tag_turn(text)
    }
}

impl<T: TurnTagger + ?Sized> TurnTagger for &T {
    fn tag_turn(&self, text: &str) -> Result<TaggedTurn, TagError> {
        (**self).tag_turn(text)
    }
}
