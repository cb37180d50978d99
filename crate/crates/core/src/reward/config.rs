use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tactic::{DEFAULT_ALPHA, DEFAULT_TAU};

#[derive(Debug, Clone, Error, PartialEq)]
#[error("invalid reward config: {0}")]
pub struct ConfigError(pub String);

/// Named weightings of the two diversity terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    /// Quality plus cross-turn KL novelty.
    #[serde(rename = "q_kl")]
    QualityKl,
    /// Quality plus within-turn entropy.
    #[serde(rename = "q_h")]
    QualityEntropy,
    /// Quality plus both terms at half weight each.
    #[serde(rename = "q_kl_h")]
    QualityKlEntropy,
}

impl Preset {
    pub const ALL: [Preset; 3] = [
        Preset::QualityKl,
        Preset::QualityEntropy,
        Preset::QualityKlEntropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::QualityKl => "q_kl",
            Preset::QualityEntropy => "q_h",
            Preset::QualityKlEntropy => "q_kl_h",
        }
    }

    /// `(gamma_kl, gamma_ent)`.
    pub fn weights(self) -> (f64, f64) {
        match self {
            Preset::QualityKl => (1.0, 0.0),
            Preset::QualityEntropy => (0.0, 1.0),
            Preset::QualityKlEntropy => (0.5, 0.5),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                ConfigError(format!(
                    "unknown preset `{s}` (expected q_kl, q_h or q_kl_h)"
                ))
            })
    }
}

/// Which distribution the entropy term is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyMode {
    /// Empirical tactic frequencies; zero for <= 1 active tactic.
    #[default]
    Unsmoothed,
    /// The Laplace-smoothed distribution used for KL.
    Smoothed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub alpha: f64,
    pub tau: f64,
    pub lambda: f64,
    pub gamma_kl: f64,
    pub gamma_ent: f64,
    pub token_target: u64,
    pub format_penalty_value: f64,
    pub entropy_mode: EntropyMode,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig::from_preset(Preset::QualityKl)
    }
}

impl RewardConfig {
    pub const DEFAULT_LAMBDA: f64 = 1.0;
    pub const DEFAULT_TOKEN_TARGET: u64 = 200;
    pub const DEFAULT_FORMAT_PENALTY: f64 = -1.0;

    pub fn from_preset(preset: Preset) -> Self {
        let (gamma_kl, gamma_ent) = preset.weights();
        RewardConfig {
            alpha: DEFAULT_ALPHA,
            tau: DEFAULT_TAU,
            lambda: Self::DEFAULT_LAMBDA,
            gamma_kl,
            gamma_ent,
            token_target: Self::DEFAULT_TOKEN_TARGET,
            format_penalty_value: Self::DEFAULT_FORMAT_PENALTY,
            entropy_mode: EntropyMode::Unsmoothed,
        }
    }

    /// Replace the diversity weights with a preset's, keeping other fields.
    pub fn with_preset(mut self, preset: Preset) -> Self {
        (self.gamma_kl, self.gamma_ent) = preset.weights();
        self
    }

    pub fn apply(mut self, o: &RewardOverrides) -> Self {
        if let Some(v) = o.alpha {
            self.alpha = v;
        }
        if let Some(v) = o.tau {
            self.tau = v;
        }
        if let Some(v) = o.lambda {
            self.lambda = v;
        }
        if let Some(v) = o.gamma_kl {
            self.gamma_kl = v;
        }
        if let Some(v) = o.gamma_ent {
            self.gamma_ent = v;
        }
        if let Some(v) = o.token_target {
            self.token_target = v;
        }
        if let Some(v) = o.format_penalty_value {
            self.format_penalty_value = v;
        }
        if let Some(v) = o.entropy_mode {
            self.entropy_mode = v;
        }
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError(format!("{name} must be > 0, got {v}")))
            }
        };
        let non_negative = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(ConfigError(format!("{name} must be >= 0, got {v}")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("tau", self.tau)?;
        non_negative("lambda", self.lambda)?;
        non_negative("gamma_kl", self.gamma_kl)?;
        non_negative("gamma_ent", self.gamma_ent)?;
        if self.token_target == 0 {
            return Err(ConfigError("token_target must be >= 1".into()));
        }
        if !(self.format_penalty_value.is_finite() && self.format_penalty_value <= 0.0) {
            return Err(ConfigError(format!(
                "format_penalty_value must be <= 0, got {}",
                self.format_penalty_value
            )));
        }
        Ok(())
    }
}

/// Optional per-field overrides, as accepted in score requests and config
/// files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardOverrides {
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma_kl: Option<f64>,
    pub gamma_ent: Option<f64>,
    pub token_target: Option<u64>,
    pub format_penalty_value: Option<f64>,
    pub entropy_mode: Option<EntropyMode>,
}
