//! Reward composition for a group of candidate supporter replies.

mod compose;
mod config;
mod group;
mod request;

pub use compose::{
    compose_reward, format_penalty, group_advantages, leaks_tactic_label, length_penalty,
    minmax_normalize, ComposeError, ADVANTAGE_STD_FLOOR,
};
pub use config::{ConfigError, EntropyMode, Preset, RewardConfig, RewardOverrides};
pub use group::{
    reference_profile, score_rollout_group, score_rollout_group_with_quality, ConstantQuality,
    GroupError, GroupScoringError, HistoryTurn, HttpQualityScorer, QualityScorer, RewardBreakdown,
    RolloutGroup, Stage, StageFailure, TokenCounter, WhitespaceTokenCounter,
};
pub use request::{ErrorBody, RewardEngine, ScoreFailure, ScoreRequest, ScoreResponse};
