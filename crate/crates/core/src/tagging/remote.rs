//! Remote tagger: one binary scoring request per (sentence, tactic), fanned
//! out across a bounded worker pool and aggregated by coordinate.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use crate::dialogue::segment_sentences;
use crate::http::CompletionClient;
use crate::tactic::{TacticCounts, TacticId, TacticSet, NUM_TACTICS};

use super::prompt::{build_tagger_prompt, parse_score_tag, TacticDefinition};
use super::{RequestFailure, RequestFailureKind, TagError, TaggedTurn, TurnTagger};

/// One parsed tagger reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggerVerdict {
    pub tactic: TacticId,
    pub sentence_index: usize,
    pub present: bool,
    pub raw_reply: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteTagging {
    pub turn: TaggedTurn,
    /// Ordered by (sentence, tactic).
    pub verdicts: Vec<TaggerVerdict>,
}

/// Segment `turn_text`, issue `sentences x 10` requests with at most
/// `max_in_flight` outstanding, and aggregate the verdicts. The result does
/// not depend on the order in which replies arrive.
pub fn tag_turn_remote(
    client: &dyn CompletionClient,
    definitions: &[TacticDefinition; NUM_TACTICS],
    max_in_flight: usize,
    turn_text: &str,
) -> Result<RemoteTagging, TagError> {
    let sentences = segment_sentences(turn_text);
    let jobs: Vec<(usize, TacticId)> = (0..sentences.len())
        .flat_map(|s| TacticId::ALL.into_iter().map(move |t| (s, t)))
        .collect();
    let slots: Vec<Mutex<Option<Result<String, RequestFailureKind>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = max_in_flight.max(1).min(jobs.len());

    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(s, tactic)) = jobs.get(i) else {
                    break;
                };
                let prompt = build_tagger_prompt(
                    tactic,
                    &definitions[tactic.index()],
                    turn_text,
                    &sentences[s],
                );
                let reply = client.complete(&prompt).map_err(RequestFailureKind::Client);
                *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(reply);
            });
        }
    });

    let mut tags = vec![TacticSet::empty(); sentences.len()];
    let mut verdicts = Vec::with_capacity(jobs.len());
    let mut failures = Vec::new();
    for (&(s, tactic), slot) in jobs.iter().zip(slots) {
        let reply = slot
            .into_inner()
            .unwrap_or_else(|e| e.into_inner())
            .expect("every job slot is filled before the scope ends");
        let parsed = reply.and_then(|raw| {
            parse_score_tag(&raw)
                .map(|v| (v == 1, raw))
                .map_err(RequestFailureKind::Verdict)
        });
        match parsed {
            Ok((present, raw_reply)) => {
                if present {
                    tags[s].insert(tactic);
                }
                verdicts.push(TaggerVerdict {
                    tactic,
                    sentence_index: s,
                    present,
                    raw_reply,
                });
            }
            Err(kind) => failures.push(RequestFailure {
                sentence: s,
                tactic,
                kind,
            }),
        }
    }
    if !failures.is_empty() {
        return Err(TagError::Requests(failures));
    }
    let counts = TacticCounts::from_sentence_tags(&tags);
    Ok(RemoteTagging {
        turn: TaggedTurn {
            sentences,
            tags,
            counts,
        },
        verdicts,
    })
}

/// [`TurnTagger`] backed by a remote completion endpoint.
#[derive(Clone)]
pub struct RemoteTagger {
    client: Arc<dyn CompletionClient>,
    definitions: Arc<[TacticDefinition; NUM_TACTICS]>,
    max_in_flight: usize,
}

impl RemoteTagger {
    pub fn new(client: Arc<dyn CompletionClient>, max_in_flight: usize) -> Self {
        let defs: [TacticDefinition; NUM_TACTICS] = TacticId::ALL.map(TacticDefinition::builtin);
        RemoteTagger {
            client,
            definitions: Arc::new(defs),
            max_in_flight: max_in_flight.max(1),
        }
    }

    /// Replace the built-in definition of each tactic present in `defs`.
    pub fn with_definitions(mut self, defs: impl IntoIterator<Item = TacticDefinition>) -> Self {
        let mut current = (*self.definitions).clone();
        for d in defs {
            let idx = d.tactic.index();
            current[idx] = d;
        }
        self.definitions = Arc::new(current);
        self
    }

    pub fn tag_with_verdicts(&self, text: &str) -> Result<RemoteTagging, TagError> {
        tag_turn_remote(
            self.client.as_ref(),
            &self.definitions,
            self.max_in_flight,
            text,
        )
    }
}

impl TurnTagger for RemoteTagger {
    fn tag_turn(&self, text: &str) -> Result<TaggedTurn, TagError> {
        self.tag_with_verdicts(text).map(|r| r.turn)
    }
}
