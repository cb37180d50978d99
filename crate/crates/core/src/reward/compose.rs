//! Per-candidate penalties and the group-level normalization, composition and
//! advantage steps.

use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::tactic::TacticId;

use super::config::RewardConfig;

/// Below this group standard deviation every advantage is zero.
pub const ADVANTAGE_STD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ComposeError {
    #[error("group size must be ≥ 2, got {0}")]
    GroupTooSmall(usize),
    #[error("token count must be ≥ 1")]
    ZeroTokens,
    #[error("token target must be ≥ 1")]
    ZeroTarget,
    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },
}

/// `min(1, target / token_count)`.
pub fn length_penalty(token_count: u64, target: u64) -> Result<f64, ComposeError> {
    if token_count == 0 {
        return Err(ComposeError::ZeroTokens);
    }
    if target == 0 {
        return Err(ComposeError::ZeroTarget);
    }
    Ok((target as f64 / token_count as f64).min(1.0))
}

static LABEL_PATTERN: LazyLock<Regex> = LazyLock::new(|| {
    let names: Vec<String> = TacticId::ALL
        .iter()
        .map(|t| t.name().split('_').collect::<Vec<_>>().join(r"[ _-]?"))
        .collect();
    let names = names.join("|");
    let bracketed = format!(r"\[\s*(?:{names})\s*\]");
    let tagged = format!(r"</?(?:{names})/?>");
    let line_head =
        format!(r"(?m:^[ \t]*(?:[-*>#]+[ \t]*)?(?:\*\*|__)?(?:{names})(?:\*\*|__)?[ \t]*:)");
    Regex::new(&format!("(?i){bracketed}|{tagged}|{line_head}")).expect("label pattern compiles")
});

/// Whether the text exposes a tactic name as a label: `[Validation]`,
/// `<validation>`/`</validation>`, or a line starting `Validation:`.
pub fn leaks_tactic_label(text: &str) -> bool {
    LABEL_PATTERN.is_match(text)
}

/// `penalty_value` if the text leaks a tactic label, else 0.
pub fn format_penalty(text: &str, penalty_value: f64) -> f64 {
    if leaks_tactic_label(text) {
        penalty_value
    } else {
        0.0
    }
}

fn check_group(values: &[f64]) -> Result<(), ComposeError> {
    if values.len() < 2 {
        return Err(ComposeError::GroupTooSmall(values.len()));
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(ComposeError::NonFinite { index, value });
    }
    Ok(())
}

/// `(v - min) / (max - min)`; a constant group maps to 0.5 everywhere.
pub fn minmax_normalize(values: &[f64]) -> Result<Vec<f64>, ComposeError> {
    check_group(values)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(vec![0.5; values.len()]);
    }
    let range = max - min;
    Ok(values
        .iter()
        .map(|&v| ((v - min) / range).clamp(0.0, 1.0))
        .collect())
}

/// `ell * (q + lambda * (gamma_kl * kl + gamma_ent * h)) + delta`.
pub fn compose_reward(
    q_norm: f64,
    kl_norm: f64,
    h_norm: f64,
    ell: f64,
    delta: f64,
    config: &RewardConfig,
) -> f64 {
    ell * (q_norm + config.lambda * (config.gamma_kl * kl_norm + config.gamma_ent * h_norm)) + delta
}

/// Sum in ascending order so the result does not depend on input order.
fn ordered_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.into_iter().sum()
}

/// Standardize by group mean and population standard deviation.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>, ComposeError> {
    check_group(rewards)?;
    let n = rewards.len() as f64;
    let mean = ordered_sum(rewards.iter().copied()) / n;
    let var = ordered_sum(rewards.iter().map(|&r| (r - mean) * (r - mean))) / n;
    let std = var.sqrt();
    if std < ADVANTAGE_STD_FLOOR {
        return Ok(vec![0.0; rewards.len()]);
    }
    Ok(rewards.iter().map(|&r| (r - mean) / std).collect())
}
