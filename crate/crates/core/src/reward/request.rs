//! The `/score` request and response bodies and the engine that turns one
//! into the other. The CLI `score` command and the HTTP service both go
//! through [`RewardEngine`], so their outputs are byte-identical.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dialogue::Turn;
use crate::tagging::TurnTagger;

use super::config::{ConfigError, Preset, RewardConfig, RewardOverrides};
use super::group::{
    score_rollout_group, GroupScoringError, HistoryTurn, QualityScorer, RewardBreakdown,
    RolloutGroup, TokenCounter, WhitespaceTokenCounter,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    pub history: Vec<HistoryTurn>,
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overrides: Option<RewardOverrides>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub breakdowns: Vec<RewardBreakdown>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScoreFailure {
    /// The request itself is malformed or describes an invalid group.
    #[error("invalid request: {0}")]
    Invalid(String),
    /// A tagger or quality call failed while scoring.
    #[error(transparent)]
    Scoring(#[from] GroupScoringError),
}

/// JSON error body shared by the service and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub reason: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<usize>,
}

impl ScoreFailure {
    pub fn is_client_error(&self) -> bool {
        matches!(self, ScoreFailure::Invalid(_))
    }

    pub fn to_body(&self) -> ErrorBody {
        match self {
            ScoreFailure::Invalid(reason) => ErrorBody {
                error: "invalid_request".into(),
                reason: reason.clone(),
                stage: None,
                candidate: None,
            },
            ScoreFailure::Scoring(e) => ErrorBody {
                error: "scoring_failed".into(),
                reason: e.to_string(),
                stage: Some(e.stage.into()),
                candidate: e.candidate,
            },
        }
    }
}

pub struct RewardEngine {
    tagger: Arc<dyn TurnTagger>,
    quality: Arc<dyn QualityScorer>,
    counter: Arc<dyn TokenCounter>,
    config: RewardConfig,
}

impl RewardEngine {
    pub fn new(
        tagger: Arc<dyn TurnTagger>,
        quality: Arc<dyn QualityScorer>,
        config: RewardConfig,
    ) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(RewardEngine {
            tagger,
            quality,
            counter: Arc::new(WhitespaceTokenCounter),
            config,
        })
    }

    pub fn with_token_counter(mut self, counter: Arc<dyn TokenCounter>) -> Self {
        self.counter = counter;
        self
    }

    /// The default config applied when a request names no preset or
    /// overrides.
    pub fn config(&self) -> &RewardConfig {
        &self.config
    }

    /// Default config, then the request preset's weights, then overrides.
    pub fn resolve_config(&self, req: &ScoreRequest) -> Result<RewardConfig, ScoreFailure> {
        let mut cfg = self.config;
        if let Some(p) = req.preset {
            cfg = cfg.with_preset(p);
        }
        if let Some(o) = &req.overrides {
            cfg = cfg.apply(o);
        }
        cfg.validate()
            .map_err(|e| ScoreFailure::Invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn parse_request(body: &[u8]) -> Result<ScoreRequest, ScoreFailure> {
        serde_json::from_slice(body).map_err(|e| ScoreFailure::Invalid(e.to_string()))
    }

    pub fn score(&self, req: &ScoreRequest) -> Result<ScoreResponse, ScoreFailure> {
        let cfg = self.resolve_config(req)?;
        let history: Vec<Turn> = req.history.iter().map(Turn::from).collect();
        let group = RolloutGroup::new(history, req.candidates.clone())
            .map_err(|e| ScoreFailure::Invalid(e.to_string()))?;
        let breakdowns = score_rollout_group(
            &group,
            self.tagger.as_ref(),
            self.quality.as_ref(),
            &cfg,
            self.counter.as_ref(),
        )?;
        Ok(ScoreResponse { breakdowns })
    }

    /// Parse, score and serialize one request body.
    pub fn score_json(&self, body: &[u8]) -> Result<String, ScoreFailure> {
        let req = Self::parse_request(body)?;
        let resp = self.score(&req)?;
        Ok(serde_json::to_string(&resp).expect("breakdowns serialize"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::group::ConstantQuality;
    use crate::tagging::KeywordTagger;

    fn engine() -> RewardEngine {
        RewardEngine::new(
            Arc::new(KeywordTagger),
            Arc::new(ConstantQuality(0.5)),
            RewardConfig::default(),
        )
        .unwrap()
    }

    const GOLDEN: &str = r#"{"history":[{"role":"seeker","text":"I lost my job."},{"role":"supporter","text":"You should rest. Try to sleep."},{"role":"seeker","text":"I can't."}],"candidates":["What happened?","You should rest. Try to sleep."]}"#;

    #[test]
    fn scores_golden_request() {
        let out = engine().score_json(GOLDEN.as_bytes()).unwrap();
        let resp: ScoreResponse = serde_json::from_str(&out).unwrap();
        let r: Vec<f64> = resp.breakdowns.iter().map(|b| b.composed_reward).collect();
        assert_eq!(r, vec![1.5, 0.5]);
    }

    #[test]
    fn rejects_small_group_with_reason() {
        let body = r#"{"history":[{"role":"seeker","text":"hi"}],"candidates":["a"]}"#;
        let e = engine().score_json(body.as_bytes()).unwrap_err();
        assert!(e.is_client_error());
        assert!(e.to_body().reason.contains("group size must be ≥ 2"), "{e}");
    }

    #[test]
    fn rejects_unknown_fields_and_bad_overrides() {
        let e = engine()
            .score_json(br#"{"history":[],"candidate":[]}"#)
            .unwrap_err();
        assert!(e.is_client_error());
        let body = r#"{"history":[{"role":"seeker","text":"hi"}],"candidates":["a","b"],"overrides":{"lambda":-1}}"#;
        assert!(engine()
            .score_json(body.as_bytes())
            .unwrap_err()
            .is_client_error());
    }

    #[test]
    fn preset_and_overrides_resolve_in_order() {
        let req: ScoreRequest = serde_json::from_str(
            r#"{"history":[],"candidates":[],"preset":"q_kl_h","overrides":{"gamma_kl":0.25}}"#,
        )
        .unwrap();
        let cfg = engine().resolve_config(&req).unwrap();
        assert_eq!((cfg.gamma_kl, cfg.gamma_ent), (0.25, 0.5));
    }
}
