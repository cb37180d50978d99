//! Tactic statistics over tagged corpora: prevalence, stickiness and
//! breadth.

use serde::Serialize;
use thiserror::Error;

use crate::dialogue::Conversation;
use crate::tactic::{TacticId, TacticSet, NUM_TACTICS};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("conversation `{conversation}` turn {turn} has no tactic tags")]
    MissingTags { conversation: String, turn: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("undefined: {0}")]
    Undefined(String),
}

/// A proportion backed by its counts. Undefined when there are no events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Estimate {
    pub hits: u64,
    pub events: u64,
}

impl Estimate {
    pub fn value(&self) -> Option<f64> {
        (self.events > 0).then(|| self.hits as f64 / self.events as f64)
    }

    fn record(&mut self, hit: bool) {
        self.events += 1;
        self.hits += hit as u64;
    }

    fn merge(&mut self, other: Estimate) {
        self.hits += other.hits;
        self.events += other.events;
    }
}

/// Every supporter turn lacking tags, as `(conversation id, turn index)`.
pub fn untagged_turns(corpus: &[Conversation]) -> Vec<(String, usize)> {
    corpus
        .iter()
        .flat_map(|c| {
            c.turns
                .iter()
                .enumerate()
                .filter(|(_, t)| t.is_supporter() && t.counts().is_none())
                .map(|(i, _)| (c.id.clone(), i))
        })
        .collect()
}

/// Present-tactic sets of a conversation's supporter turns, in order.
pub fn supporter_tactic_sets(conv: &Conversation) -> Result<Vec<TacticSet>, AnalyticsError> {
    conv.turns
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_supporter())
        .map(|(i, t)| {
            t.counts()
                .map(|c| c.present())
                .ok_or_else(|| AnalyticsError::MissingTags {
                    conversation: conv.id.clone(),
                    turn: i,
                })
        })
        .collect()
}

fn all_sets(corpus: &[Conversation]) -> Result<Vec<Vec<TacticSet>>, AnalyticsError> {
    corpus.iter().map(supporter_tactic_sets).collect()
}

/// Fraction of supporter turns containing each tactic.
pub fn prevalence(corpus: &[Conversation]) -> Result<[Estimate; NUM_TACTICS], AnalyticsError> {
    Ok(prevalence_of(&all_sets(corpus)?))
}

fn prevalence_of(sets: &[Vec<TacticSet>]) -> [Estimate; NUM_TACTICS] {
    let mut out = [Estimate::default(); NUM_TACTICS];
    for set in sets.iter().flatten() {
        for t in TacticId::ALL {
            out[t.index()].record(set.contains(t));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TacticStickiness {
    pub tactic: TacticId,
    /// P(T in turn t | T in turn t-1).
    pub given_present: Estimate,
    /// P(T in turn t | T not in turn t-1).
    pub given_absent: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairStickiness {
    pub conversation: String,
    /// Index of the pair within the conversation's supporter subsequence.
    pub pair: usize,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StickinessReport {
    /// Event-pooled over all pairs and previous-turn tactics.
    pub pooled: Estimate,
    /// Event-pooled complement over previous-turn-absent tactics.
    pub pooled_given_absent: Estimate,
    /// Mean of the defined per-tactic `given_present` values.
    pub macro_mean: Option<f64>,
    pub per_tactic: Vec<TacticStickiness>,
    pub per_pair: Vec<PairStickiness>,
}

impl StickinessReport {
    pub fn pooled_stickiness(&self) -> Option<f64> {
        self.pooled.value()
    }
}

pub fn stickiness(corpus: &[Conversation]) -> Result<StickinessReport, AnalyticsError> {
    let sets = all_sets(corpus)?;
    let ids: Vec<&str> = corpus.iter().map(|c| c.id.as_str()).collect();
    Ok(stickiness_of(&ids, &sets))
}

fn stickiness_of(ids: &[&str], sets: &[Vec<TacticSet>]) -> StickinessReport {
    let mut per_tactic: Vec<TacticStickiness> = TacticId::ALL
        .into_iter()
        .map(|tactic| TacticStickiness {
            tactic,
            given_present: Estimate::default(),
            given_absent: Estimate::default(),
        })
        .collect();
    let mut per_pair = Vec::new();
    for (id, conv) in ids.iter().zip(sets) {
        for (k, w) in conv.windows(2).enumerate() {
            let (prev, cur) = (w[0], w[1]);
            let mut pair = Estimate::default();
            for t in TacticId::ALL {
                let slot = &mut per_tactic[t.index()];
                if prev.contains(t) {
                    slot.given_present.record(cur.contains(t));
                    pair.record(cur.contains(t));
                } else {
                    slot.given_absent.record(cur.contains(t));
                }
            }
            per_pair.push(PairStickiness {
                conversation: id.to_string(),
                pair: k,
                value: pair.value(),
            });
        }
    }
    let mut pooled = Estimate::default();
    let mut pooled_given_absent = Estimate::default();
    for s in &per_tactic {
        pooled.merge(s.given_present);
        pooled_given_absent.merge(s.given_absent);
    }
    let defined: Vec<f64> = per_tactic
        .iter()
        .filter_map(|s| s.given_present.value())
        .collect();
    let macro_mean =
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    StickinessReport {
        pooled,
        pooled_given_absent,
        macro_mean,
        per_tactic,
        per_pair,
    }
}

/// Stickiness of a single conversation, pooled over its pairs.
pub fn conversation_stickiness(sets: &[TacticSet]) -> Estimate {
    let mut e = Estimate::default();
    for w in sets.windows(2) {
        for t in w[0].iter() {
            e.record(w[1].contains(t));
        }
    }
    e
}

/// Tactics new relative to the previous supporter turn, per turn. Every
/// tactic of the first turn counts as new.
pub fn new_tactic_counts(sets: &[TacticSet]) -> Vec<usize> {
    let mut prev = TacticSet::empty();
    sets.iter()
        .map(|&s| {
            let n = s.difference(prev).len();
            prev = s;
            n
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Mean number of distinct tactics per supporter turn.
pub fn tactics_per_turn(corpus: &[Conversation]) -> Result<Option<f64>, AnalyticsError> {
    let sets = all_sets(corpus)?;
    Ok(mean(sets.iter().flatten().map(|s| s.len() as f64)))
}

/// Mean number of new tactics per supporter turn.
pub fn new_tactics_per_turn(corpus: &[Conversation]) -> Result<Option<f64>, AnalyticsError> {
    let sets = all_sets(corpus)?;
    Ok(mean(
        sets.iter()
            .flat_map(|c| new_tactic_counts(c))
            .map(|n| n as f64),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub conversations: usize,
    pub supporter_turns: usize,
    pub pairs: usize,
    pub prevalence: [Estimate; NUM_TACTICS],
    pub tactics_per_turn: Option<f64>,
    pub new_tactics_per_turn: Option<f64>,
}

pub fn corpus_stats(corpus: &[Conversation]) -> Result<CorpusStats, AnalyticsError> {
    let sets = all_sets(corpus)?;
    Ok(CorpusStats {
        conversations: corpus.len(),
        supporter_turns: sets.iter().map(Vec::len).sum(),
        pairs: sets.iter().map(|c| c.len().saturating_sub(1)).sum(),
        prevalence: prevalence_of(&sets),
        tactics_per_turn: mean(sets.iter().flatten().map(|s| s.len() as f64)),
        new_tactics_per_turn: mean(
            sets.iter()
                .flat_map(|c| new_tactic_counts(c))
                .map(|n| n as f64),
        ),
    })
}
