//! Scoring a whole rollout group: reference profile, per-candidate raw
//! scores, then normalization, composition and advantages.

use std::fmt;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialogue::{Role, Turn};
use crate::http::{ClientError, JsonClient, ScoringClientConfig};
use crate::tactic::{
    entropy_breadth, kl_novelty, smooth_counts, smoothed_entropy, TacticCounts, TacticDistribution,
    TacticError,
};
use crate::tagging::{TagError, TurnTagger};

use super::compose::{
    compose_reward, format_penalty, group_advantages, length_penalty, minmax_normalize,
    ComposeError,
};
use super::config::{ConfigError, EntropyMode, RewardConfig};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GroupError {
    #[error("group size must be ≥ 2, got {0}")]
    TooSmall(usize),
    #[error("candidate {0} is empty")]
    EmptyCandidate(usize),
    #[error("history is empty")]
    EmptyHistory,
    #[error("history must end with a seeker turn")]
    HistoryNotSeekerTerminated,
}

/// A dialogue prefix ending in a seeker turn plus N >= 2 candidate replies.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutGroup {
    history: Vec<Turn>,
    candidates: Vec<String>,
}

impl RolloutGroup {
    pub fn new(history: Vec<Turn>, candidates: Vec<String>) -> Result<Self, GroupError> {
        if candidates.len() < 2 {
            return Err(GroupError::TooSmall(candidates.len()));
        }
        if let Some(i) = candidates.iter().position(|c| c.trim().is_empty()) {
            return Err(GroupError::EmptyCandidate(i));
        }
        match history.last() {
            None => return Err(GroupError::EmptyHistory),
            Some(t) if t.role() != Role::Seeker => {
                return Err(GroupError::HistoryNotSeekerTerminated)
            }
            Some(_) => {}
        }
        Ok(RolloutGroup {
            history,
            candidates,
        })
    }

    pub fn history(&self) -> &[Turn] {
        &self.history
    }

    pub fn candidates(&self) -> &[String] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// The most recent supporter turn in the history, if any.
    pub fn previous_supporter_turn(&self) -> Option<&Turn> {
        self.history.iter().rev().find(|t| t.is_supporter())
    }
}

/// Scalar quality score for one candidate given the history.
pub trait QualityScorer: Send + Sync {
    fn score(&self, history: &[Turn], candidate: &str) -> Result<f64, ClientError>;
}

impl<T: QualityScorer + ?Sized> QualityScorer for std::sync::Arc<T> {
    fn score(&self, history: &[Turn], candidate: &str) -> Result<f64, ClientError> {
        (**self).score(history, candidate)
    }
}

impl<T: QualityScorer + ?Sized> QualityScorer for &T {
    fn score(&self, history: &[Turn], candidate: &str) -> Result<f64, ClientError> {
        (**self).score(history, candidate)
    }
}

/// Returns the same score for every candidate. Useful offline, where the
/// quality term then drops out of the group after normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantQuality(pub f64);

impl QualityScorer for ConstantQuality {
    fn score(&self, _history: &[Turn], _candidate: &str) -> Result<f64, ClientError> {
        Ok(self.0)
    }
}

/// Wire form of one history turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryTurn {
    pub role: Role,
    pub text: String,
}

impl From<&Turn> for HistoryTurn {
    fn from(t: &Turn) -> Self {
        HistoryTurn {
            role: t.role(),
            text: t.text().to_string(),
        }
    }
}

impl From<&HistoryTurn> for Turn {
    fn from(t: &HistoryTurn) -> Self {
        Turn::new(t.role, t.text.clone())
    }
}

#[derive(Serialize)]
struct QualityRequest<'a> {
    history: Vec<HistoryTurn>,
    candidate: &'a str,
}

#[derive(Deserialize)]
struct QualityResponse {
    score: f64,
}

/// Quality client: `{"history": [...], "candidate": str}` → `{"score": real}`.
#[derive(Debug, Clone)]
pub struct HttpQualityScorer {
    inner: JsonClient,
}

impl HttpQualityScorer {
    pub fn new(config: ScoringClientConfig) -> Result<Self, ClientError> {
        Ok(HttpQualityScorer {
            inner: JsonClient::new(config)?,
        })
    }

    pub fn config(&self) -> &ScoringClientConfig {
        self.inner.config()
    }
}

impl QualityScorer for HttpQualityScorer {
    fn score(&self, history: &[Turn], candidate: &str) -> Result<f64, ClientError> {
        let body = QualityRequest {
            history: history.iter().map(HistoryTurn::from).collect(),
            candidate,
        };
        let resp: QualityResponse = self.inner.post_json(&body)?;
        Ok(resp.score)
    }
}

/// Counts tokens for the length penalty.
pub trait TokenCounter: Send + Sync {
    fn count(&self, text: &str) -> u64;
}

/// Whitespace-delimited word count.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenCounter;

impl TokenCounter for WhitespaceTokenCounter {
    fn count(&self, text: &str) -> u64 {
        text.split_whitespace().count() as u64
    }
}

/// Every per-candidate quantity, raw and derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub quality_raw: f64,
    pub kl_raw: f64,
    pub entropy_raw: f64,
    pub quality_norm: f64,
    pub kl_norm: f64,
    pub entropy_norm: f64,
    pub length_penalty: f64,
    pub format_penalty: f64,
    pub composed_reward: f64,
    pub advantage: f64,
    pub token_count: u64,
    pub tactic_counts: TacticCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(into = "u8")]
pub enum Stage {
    ReferenceProfile = 1,
    Rollout = 2,
    Composition = 3,
}

impl From<Stage> for u8 {
    fn from(s: Stage) -> u8 {
        s as u8
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

#[derive(Debug, Error)]
pub enum StageFailure {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("tagging failed: {0}")]
    Tagging(#[from] TagError),
    #[error("quality scoring failed: {0}")]
    Quality(#[from] ClientError),
    #[error("quality score {0} is not finite")]
    NonFiniteQuality(f64),
    #[error(transparent)]
    Tactic(#[from] TacticError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
}

/// The whole group failed; no breakdowns are produced.
#[derive(Debug, Error)]
pub struct GroupScoringError {
    pub stage: Stage,
    pub candidate: Option<usize>,
    #[source]
    pub failure: StageFailure,
}

impl fmt::Display for GroupScoringError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.candidate {
            Some(i) => write!(
                f,
                "stage {} failed for candidate {i}: {}",
                self.stage, self.failure
            ),
            None => write!(f, "stage {} failed: {}", self.stage, self.failure),
        }
    }
}

impl GroupScoringError {
    fn new(stage: Stage, candidate: Option<usize>, failure: impl Into<StageFailure>) -> Self {
        GroupScoringError {
            stage,
            candidate,
            failure: failure.into(),
        }
    }
}

/// Stage 1: smoothed profile of the previous supporter turn, or uniform.
pub fn reference_profile(
    group: &RolloutGroup,
    tagger: &dyn TurnTagger,
    config: &RewardConfig,
) -> Result<TacticDistribution, GroupScoringError> {
    let err = |f: StageFailure| GroupScoringError::new(Stage::ReferenceProfile, None, f);
    match group.previous_supporter_turn() {
        None => Ok(TacticDistribution::uniform()),
        Some(turn) => {
            let tagged = tagger.tag_turn(turn.text()).map_err(|e| err(e.into()))?;
            smooth_counts(&tagged.counts, config.alpha).map_err(|e| err(e.into()))
        }
    }
}

struct RawScores {
    quality: f64,
    kl: f64,
    entropy: f64,
    tokens: u64,
    format_penalty: f64,
    counts: TacticCounts,
}

/// Score every candidate against the live quality client.
pub fn score_rollout_group(
    group: &RolloutGroup,
    tagger: &dyn TurnTagger,
    quality: &dyn QualityScorer,
    config: &RewardConfig,
    counter: &dyn TokenCounter,
) -> Result<Vec<RewardBreakdown>, GroupScoringError> {
    score_with(group, tagger, config, counter, |_, cand| {
        quality.score(group.history(), cand)
    })
}

/// Same pipeline with quality scores supplied up front, one per candidate.
pub fn score_rollout_group_with_quality(
    group: &RolloutGroup,
    tagger: &dyn TurnTagger,
    quality_scores: &[f64],
    config: &RewardConfig,
    counter: &dyn TokenCounter,
) -> Result<Vec<RewardBreakdown>, GroupScoringError> {
    if quality_scores.len() != group.len() {
        return Err(GroupScoringError::new(
            Stage::Rollout,
            None,
            ClientError::Config(format!(
                "{} quality scores for {} candidates",
                quality_scores.len(),
                group.len()
            )),
        ));
    }
    score_with(group, tagger, config, counter, |i, _| Ok(quality_scores[i]))
}

fn score_with<F>(
    group: &RolloutGroup,
    tagger: &dyn TurnTagger,
    config: &RewardConfig,
    counter: &dyn TokenCounter,
    quality: F,
) -> Result<Vec<RewardBreakdown>, GroupScoringError>
where
    F: Fn(usize, &str) -> Result<f64, ClientError> + Sync,
{
    config
        .validate()
        .map_err(|e| GroupScoringError::new(Stage::ReferenceProfile, None, e))?;
    let reference = reference_profile(group, tagger, config)?;

    let raw_one = |i: usize, cand: &str| -> Result<RawScores, GroupScoringError> {
        let err = |f: StageFailure| GroupScoringError::new(Stage::Rollout, Some(i), f);
        let tagged = tagger.tag_turn(cand).map_err(|e| err(e.into()))?;
        let current = smooth_counts(&tagged.counts, config.alpha).map_err(|e| err(e.into()))?;
        let kl = kl_novelty(&current, &reference, config.tau).map_err(|e| err(e.into()))?;
        let entropy = match config.entropy_mode {
            EntropyMode::Unsmoothed => entropy_breadth(&tagged.counts),
            EntropyMode::Smoothed => smoothed_entropy(&current),
        };
        let q = quality(i, cand).map_err(|e| err(e.into()))?;
        if !q.is_finite() {
            return Err(err(StageFailure::NonFiniteQuality(q)));
        }
        Ok(RawScores {
            quality: q,
            kl,
            entropy,
            tokens: counter.count(cand),
            format_penalty: format_penalty(cand, config.format_penalty_value),
            counts: tagged.counts,
        })
    };

    let results: Vec<Result<RawScores, GroupScoringError>> = thread::scope(|s| {
        let handles: Vec<_> = group
            .candidates()
            .iter()
            .enumerate()
            .map(|(i, cand)| {
                let raw_one = &raw_one;
                s.spawn(move || raw_one(i, cand))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("candidate scoring thread panicked"))
            .collect()
    });
    let raws = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    compose_group(&raws, config)
}

fn compose_group(
    raws: &[RawScores],
    config: &RewardConfig,
) -> Result<Vec<RewardBreakdown>, GroupScoringError> {
    let stage3 = |candidate: Option<usize>, e: ComposeError| {
        GroupScoringError::new(Stage::Composition, candidate, e)
    };
    let column = |f: fn(&RawScores) -> f64| -> Result<Vec<f64>, GroupScoringError> {
        minmax_normalize(&raws.iter().map(f).collect::<Vec<_>>()).map_err(|e| stage3(None, e))
    };
    let q_norm = column(|r| r.quality)?;
    let kl_norm = column(|r| r.kl)?;
    let h_norm = column(|r| r.entropy)?;

    let mut ells = Vec::with_capacity(raws.len());
    let mut rewards = Vec::with_capacity(raws.len());
    for (i, raw) in raws.iter().enumerate() {
        let ell =
            length_penalty(raw.tokens, config.token_target).map_err(|e| stage3(Some(i), e))?;
        rewards.push(compose_reward(
            q_norm[i],
            kl_norm[i],
            h_norm[i],
            ell,
            raw.format_penalty,
            config,
        ));
        ells.push(ell);
    }
    let advantages = group_advantages(&rewards).map_err(|e| stage3(None, e))?;

    Ok(raws
        .iter()
        .enumerate()
        .map(|(i, raw)| RewardBreakdown {
            quality_raw: raw.quality,
            kl_raw: raw.kl,
            entropy_raw: raw.entropy,
            quality_norm: q_norm[i],
            kl_norm: kl_norm[i],
            entropy_norm: h_norm[i],
            length_penalty: ells[i],
            format_penalty: raw.format_penalty,
            composed_reward: rewards[i],
            advantage: advantages[i],
            token_count: raw.tokens,
            tactic_counts: raw.counts,
        })
        .collect())
}
