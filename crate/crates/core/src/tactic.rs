//! The ten-tactic taxonomy and the reward-relevant quantities over it:
//! Laplace-smoothed distributions, clipped KL novelty and entropy breadth.
//!
//! All logarithms are natural (nats).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of tactics in the taxonomy.
pub const NUM_TACTICS: usize = 10;

/// Default Laplace smoothing constant.
pub const DEFAULT_ALPHA: f64 = 0.1;

/// Default clip threshold for the KL novelty term.
pub const DEFAULT_TAU: f64 = 5.0;

/// Tolerance used when checking that a distribution sums to one.
const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TacticError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("unknown tactic name `{0}`")]
    UnknownTactic(String),
}

/// One of the ten empathy tactics. The discriminant is the stable index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TacticId {
    Advice = 0,
    Assistance = 1,
    EmotionalExpression = 2,
    Empowerment = 3,
    Information = 4,
    Paraphrasing = 5,
    Questioning = 6,
    Reappraisal = 7,
    SelfDisclosure = 8,
    Validation = 9,
}

impl TacticId {
    pub const ALL: [TacticId; NUM_TACTICS] = [
        TacticId::Advice,
        TacticId::Assistance,
        TacticId::EmotionalExpression,
        TacticId::Empowerment,
        TacticId::Information,
        TacticId::Paraphrasing,
        TacticId::Questioning,
        TacticId::Reappraisal,
        TacticId::SelfDisclosure,
        TacticId::Validation,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<TacticId> {
        Self::ALL.get(index).copied()
    }

    /// Machine name, e.g. `emotional_expression`.
    pub fn name(self) -> &'static str {
        match self {
            TacticId::Advice => "advice",
            TacticId::Assistance => "assistance",
            TacticId::EmotionalExpression => "emotional_expression",
            TacticId::Empowerment => "empowerment",
            TacticId::Information => "information",
            TacticId::Paraphrasing => "paraphrasing",
            TacticId::Questioning => "questioning",
            TacticId::Reappraisal => "reappraisal",
            TacticId::SelfDisclosure => "self_disclosure",
            TacticId::Validation => "validation",
        }
    }

    /// Human-readable name used inside prompts, e.g. `Emotional Expression`.
    pub fn display_name(self) -> &'static str {
        match self {
            TacticId::Advice => "Advice",
            TacticId::Assistance => "Assistance",
            TacticId::EmotionalExpression => "Emotional Expression",
            TacticId::Empowerment => "Empowerment",
            TacticId::Information => "Information",
            TacticId::Paraphrasing => "Paraphrasing",
            TacticId::Questioning => "Questioning",
            TacticId::Reappraisal => "Reappraisal",
            TacticId::SelfDisclosure => "Self-Disclosure",
            TacticId::Validation => "Validation",
        }
    }
}

impl fmt::Display for TacticId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TacticId {
    type Err = TacticError;

    /// Accepts the machine name, the display name, and space/hyphen variants,
    /// case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .map(|c| {
                if c == ' ' || c == '-' {
                    '_'
                } else {
                    c.to_ascii_lowercase()
                }
            })
            .collect();
        TacticId::ALL
            .into_iter()
            .find(|t| t.name() == norm)
            .ok_or_else(|| TacticError::UnknownTactic(s.to_string()))
    }
}

const _: () = assert!(NUM_TACTICS <= 16);

/// Set of tactics present in one sentence (or one turn), as a 10-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TacticSet(u16);

impl TacticSet {
    const MASK: u16 = (1 << NUM_TACTICS) - 1;

    pub fn empty() -> Self {
        TacticSet(0)
    }

    pub fn from_bits(bits: u16) -> Self {
        TacticSet(bits & Self::MASK)
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn insert(&mut self, tactic: TacticId) {
        self.0 |= 1 << tactic.index();
    }

    pub fn contains(self, tactic: TacticId) -> bool {
        self.0 & (1 << tactic.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: TacticSet) -> TacticSet {
        TacticSet(self.0 | other.0)
    }

    pub fn difference(self, other: TacticSet) -> TacticSet {
        TacticSet(self.0 & !other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = TacticId> {
        TacticId::ALL.into_iter().filter(move |t| self.contains(*t))
    }

    /// The 0/1 vector used by the corpus wire format.
    pub fn to_vector(self) -> [u8; NUM_TACTICS] {
        let mut out = [0u8; NUM_TACTICS];
        for t in self.iter() {
            out[t.index()] = 1;
        }
        out
    }

    pub fn from_vector(v: &[u8]) -> Result<Self, TacticError> {
        if v.len() != NUM_TACTICS {
            return Err(TacticError::InvalidParameter(format!(
                "tag vector must have {NUM_TACTICS} entries, got {}",
                v.len()
            )));
        }
        let mut set = TacticSet::empty();
        for (i, &bit) in v.iter().enumerate() {
            match bit {
                0 => {}
                1 => set.insert(TacticId::ALL[i]),
                other => {
                    return Err(TacticError::InvalidParameter(format!(
                        "tag entries must be 0 or 1, got {other}"
                    )))
                }
            }
        }
        Ok(set)
    }
}

impl FromIterator<TacticId> for TacticSet {
    fn from_iter<I: IntoIterator<Item = TacticId>>(iter: I) -> Self {
        let mut set = TacticSet::empty();
        for t in iter {
            set.insert(t);
        }
        set
    }
}

/// Per-tactic sentence counts for one supporter turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TacticCounts([u64; NUM_TACTICS]);

impl TacticCounts {
    pub fn new(counts: [u64; NUM_TACTICS]) -> Self {
        TacticCounts(counts)
    }

    pub fn zero() -> Self {
        TacticCounts([0; NUM_TACTICS])
    }

    /// Convenience constructor from `(tactic, count)` pairs.
    pub fn from_pairs(pairs: &[(TacticId, u64)]) -> Self {
        let mut c = Self::zero();
        for &(t, n) in pairs {
            c.0[t.index()] += n;
        }
        c
    }

    /// Columnwise sum of per-sentence tactic sets.
    pub fn from_sentence_tags(tags: &[TacticSet]) -> Self {
        let mut c = Self::zero();
        for set in tags {
            for t in set.iter() {
                c.0[t.index()] += 1;
            }
        }
        c
    }

    pub fn get(&self, tactic: TacticId) -> u64 {
        self.0[tactic.index()]
    }

    pub fn as_array(&self) -> &[u64; NUM_TACTICS] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// Tactics with a nonzero count.
    pub fn present(&self) -> TacticSet {
        TacticId::ALL
            .into_iter()
            .filter(|t| self.get(*t) > 0)
            .collect()
    }
}

/// Strictly positive probability vector over the ten tactics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct TacticDistribution([f64; NUM_TACTICS]);

impl TacticDistribution {
    /// Validates positivity and normalization. Zero-containing (unsmoothed)
    /// vectors are refused.
    pub fn new(probs: [f64; NUM_TACTICS]) -> Result<Self, TacticError> {
        if let Some((k, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p > 0.0 && **p <= 1.0))
        {
            return Err(TacticError::InvalidDistribution(format!(
                "entry {k} ({}) is {p}; distributions must be smoothed and strictly positive",
                TacticId::ALL[k]
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(TacticError::InvalidDistribution(format!(
                "entries sum to {sum}, expected 1"
            )));
        }
        Ok(TacticDistribution(probs))
    }

    pub fn uniform() -> Self {
        TacticDistribution([1.0 / NUM_TACTICS as f64; NUM_TACTICS])
    }

    pub fn probs(&self) -> &[f64; NUM_TACTICS] {
        &self.0
    }

    pub fn get(&self, tactic: TacticId) -> f64 {
        self.0[tactic.index()]
    }
}

/// Smoothing and clipping knobs for the diversity terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub alpha: f64,
    pub tau: f64,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams {
            alpha: DEFAULT_ALPHA,
            tau: DEFAULT_TAU,
        }
    }
}

impl SmoothingParams {
    pub fn new(alpha: f64, tau: f64) -> Result<Self, TacticError> {
        check_positive("alpha", alpha)?;
        check_positive("tau", tau)?;
        Ok(SmoothingParams { alpha, tau })
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), TacticError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(TacticError::InvalidParameter(format!(
            "{name} must be > 0, got {v}"
        )))
    }
}

/// Laplace smoothing: `(c_k + alpha) / (sum_j c_j + K * alpha)`.
pub fn smooth_counts(counts: &TacticCounts, alpha: f64) -> Result<TacticDistribution, TacticError> {
    check_positive("alpha", alpha)?;
    let denom = counts.total() as f64 + NUM_TACTICS as f64 * alpha;
    let mut probs = [0.0; NUM_TACTICS];
    for (p, &c) in probs.iter_mut().zip(counts.as_array()) {
        *p = (c as f64 + alpha) / denom;
    }
    Ok(TacticDistribution(probs))
}

/// Unclipped `KL(current || reference)` in nats.
pub fn kl_divergence(current: &TacticDistribution, reference: &TacticDistribution) -> f64 {
    let kl: f64 = current
        .0
        .iter()
        .zip(reference.0.iter())
        .map(|(&q, &p)| q * (q / p).ln())
        .sum();
    // Rounding can push identical or near-identical inputs a hair below zero.
    kl.max(0.0)
}

/// Cross-turn novelty: `min(KL(current || reference), tau)`.
pub fn kl_novelty(
    current: &TacticDistribution,
    reference: &TacticDistribution,
    tau: f64,
) -> Result<f64, TacticError> {
    check_positive("tau", tau)?;
    Ok(kl_divergence(current, reference).min(tau))
}

/// Within-turn breadth: entropy of the unsmoothed empirical tactic
/// distribution. Zero when no tactic or a single tactic is present.
pub fn entropy_breadth(counts: &TacticCounts) -> f64 {
    let total = counts.total();
    if total == 0 || counts.present().len() <= 1 {
        return 0.0;
    }
    let total = total as f64;
    let h: f64 = counts
        .as_array()
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum();
    h.clamp(0.0, (NUM_TACTICS as f64).ln())
}

/// Entropy of a smoothed distribution. Never zero; kept for comparison with
/// [`entropy_breadth`].
pub fn smoothed_entropy(dist: &TacticDistribution) -> f64 {
    dist.0.iter().map(|&p| -p * p.ln()).sum()
}
