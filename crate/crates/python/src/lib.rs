//! Python bindings: reward math, group scoring, tagging and corpus analytics.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use tactic_reward::analytics::{self, EmpathyScores, Weighting};
use tactic_reward::dialogue::{load_corpus, Role, Turn};
use tactic_reward::http::{HttpCompletionClient, ScoringClientConfig};
use tactic_reward::reward::{
    self, ConstantQuality, HttpQualityScorer, Preset, QualityScorer, RewardBreakdown, RewardConfig,
    RolloutGroup, ScoreFailure, WhitespaceTokenCounter,
};
use tactic_reward::tactic::{self, TacticCounts, TacticId, NUM_TACTICS};
use tactic_reward::tagging::{KeywordTagger, RemoteTagger, TurnTagger};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn counts(v: Vec<u64>) -> PyResult<TacticCounts> {
    let arr: [u64; NUM_TACTICS] = v.try_into().map_err(|v: Vec<u64>| {
        value_err(format!("expected {NUM_TACTICS} counts, got {}", v.len()))
    })?;
    Ok(TacticCounts::new(arr))
}

fn parse_preset(name: &str) -> PyResult<Preset> {
    name.parse().map_err(value_err)
}

fn parse_role(name: &str) -> PyResult<Role> {
    match name {
        "seeker" => Ok(Role::Seeker),
        "supporter" => Ok(Role::Supporter),
        other => Err(value_err(format!("unknown role `{other}`"))),
    }
}

/// Tactic names in vector order.
#[pyfunction]
fn tactic_names() -> Vec<&'static str> {
    TacticId::ALL.iter().map(|t| t.name()).collect()
}

/// Laplace-smoothed distribution over the ten tactics.
#[pyfunction]
#[pyo3(signature = (counts, alpha = tactic::DEFAULT_ALPHA))]
fn smooth_counts(counts: Vec<u64>, alpha: f64) -> PyResult<Vec<f64>> {
    let d = tactic::smooth_counts(&self::counts(counts)?, alpha).map_err(value_err)?;
    Ok(d.probs().to_vec())
}

/// Clipped KL divergence of the current counts from the reference counts,
/// both smoothed first.
#[pyfunction]
#[pyo3(signature = (current, reference, alpha = tactic::DEFAULT_ALPHA, tau = tactic::DEFAULT_TAU))]
fn kl_novelty(current: Vec<u64>, reference: Vec<u64>, alpha: f64, tau: f64) -> PyResult<f64> {
    let q = tactic::smooth_counts(&counts(current)?, alpha).map_err(value_err)?;
    let p = tactic::smooth_counts(&counts(reference)?, alpha).map_err(value_err)?;
    tactic::kl_novelty(&q, &p, tau).map_err(value_err)
}

/// Entropy of the unsmoothed counts; zero with at most one tactic.
#[pyfunction]
fn entropy_breadth(counts: Vec<u64>) -> PyResult<f64> {
    Ok(tactic::entropy_breadth(&self::counts(counts)?))
}

#[pyfunction]
fn minmax_normalize(values: Vec<f64>) -> PyResult<Vec<f64>> {
    reward::minmax_normalize(&values).map_err(value_err)
}

#[pyfunction]
fn group_advantages(rewards: Vec<f64>) -> PyResult<Vec<f64>> {
    reward::group_advantages(&rewards).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (token_count, target = 200))]
fn length_penalty(token_count: u64, target: u64) -> PyResult<f64> {
    reward::length_penalty(token_count, target).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (text, penalty = -1.0))]
fn format_penalty(text: &str, penalty: f64) -> f64 {
    reward::format_penalty(text, penalty)
}

/// Per-sentence tactic names from the keyword tagger.
#[pyfunction]
fn keyword_tag(text: &str) -> PyResult<Vec<(String, Vec<&'static str>)>> {
    let t = KeywordTagger.tag_turn(text).map_err(value_err)?;
    Ok(t.sentences
        .into_iter()
        .zip(t.tags)
        .map(|(s, set)| (s, set.iter().map(|x| x.name()).collect()))
        .collect())
}

#[pyfunction]
fn aggregate_empathy(
    validating: f64,
    elaboration: f64,
    understanding: f64,
    unsolicited_advice: f64,
    self_oriented: f64,
    dismissing: f64,
) -> PyResult<f64> {
    let s = EmpathyScores::new(
        validating,
        elaboration,
        understanding,
        unsolicited_advice,
        self_oriented,
        dismissing,
    )
    .map_err(value_err)?;
    analytics::aggregate_empathy(&s).map_err(value_err)
}

/// Spearman's rho and its two-sided p-value.
#[pyfunction]
fn spearman(x: Vec<f64>, y: Vec<f64>) -> PyResult<(f64, f64)> {
    let t = analytics::spearman_test(&x, &y).map_err(value_err)?;
    Ok((t.rho, t.p_value))
}

#[pyfunction]
#[pyo3(signature = (a, b, weighting = "quadratic"))]
fn weighted_kappa(a: Vec<u8>, b: Vec<u8>, weighting: &str) -> PyResult<f64> {
    let w = match weighting {
        "linear" => Weighting::Linear,
        "quadratic" => Weighting::Quadratic,
        other => return Err(value_err(format!("unknown weighting `{other}`"))),
    };
    analytics::weighted_kappa(&a, &b, w).map_err(value_err)
}

#[pyfunction]
fn bigram_overlap(a: &str, b: &str) -> f64 {
    analytics::bigram_overlap(a, b)
}

#[pyfunction]
fn bleu2(candidate: &str, reference: &str) -> f64 {
    analytics::bleu2(candidate, reference)
}

/// Diagnostic report for a tagged JSONL corpus, as JSON or TSV text.
#[pyfunction]
#[pyo3(signature = (jsonl, format = "json"))]
fn analyze_corpus(py: Python<'_>, jsonl: &str, format: &str) -> PyResult<String> {
    let loaded = load_corpus(jsonl.as_bytes()).map_err(value_err)?;
    if let Some(d) = loaded.diagnostics.first() {
        return Err(value_err(d));
    }
    let report = py
        .detach(|| analytics::analyze(&loaded.conversations))
        .map_err(value_err)?;
    match format {
        "json" => Ok(report.to_json()),
        "tsv" => Ok(report.to_tsv()),
        other => Err(value_err(format!("unknown format `{other}`"))),
    }
}

fn breakdown_dict<'py>(py: Python<'py>, b: &RewardBreakdown) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("quality_raw", b.quality_raw)?;
    d.set_item("kl_raw", b.kl_raw)?;
    d.set_item("entropy_raw", b.entropy_raw)?;
    d.set_item("quality_norm", b.quality_norm)?;
    d.set_item("kl_norm", b.kl_norm)?;
    d.set_item("entropy_norm", b.entropy_norm)?;
    d.set_item("length_penalty", b.length_penalty)?;
    d.set_item("format_penalty", b.format_penalty)?;
    d.set_item("composed_reward", b.composed_reward)?;
    d.set_item("advantage", b.advantage)?;
    d.set_item("token_count", b.token_count)?;
    d.set_item("tactic_counts", b.tactic_counts.as_array().to_vec())?;
    Ok(d)
}

/// Scores rollout groups. Tags with the keyword rules unless `tagger_url`
/// is given; quality comes from `quality_url`, `quality_constant`, or
/// per-call scores passed to `score_group`.
#[pyclass(name = "RewardEngine", frozen)]
struct PyRewardEngine {
    tagger: Arc<dyn TurnTagger>,
    quality: Option<Arc<dyn QualityScorer>>,
    config: RewardConfig,
}

#[pymethods]
impl PyRewardEngine {
    #[new]
    #[pyo3(signature = (preset = "q_kl", quality_constant = None, quality_url = None, tagger_url = None))]
    fn new(
        preset: &str,
        quality_constant: Option<f64>,
        quality_url: Option<String>,
        tagger_url: Option<String>,
    ) -> PyResult<Self> {
        let config = RewardConfig::from_preset(parse_preset(preset)?);
        let tagger: Arc<dyn TurnTagger> = match tagger_url {
            Some(url) => {
                let cfg = ScoringClientConfig::new(url);
                let n = cfg.max_in_flight;
                Arc::new(RemoteTagger::new(
                    Arc::new(HttpCompletionClient::new(cfg).map_err(value_err)?),
                    n,
                ))
            }
            None => Arc::new(KeywordTagger),
        };
        let quality: Option<Arc<dyn QualityScorer>> = match (quality_constant, quality_url) {
            (Some(c), _) => Some(Arc::new(ConstantQuality(c))),
            (None, Some(url)) => Some(Arc::new(
                HttpQualityScorer::new(ScoringClientConfig::new(url)).map_err(value_err)?,
            )),
            (None, None) => None,
        };
        Ok(PyRewardEngine {
            tagger,
            quality,
            config,
        })
    }

    #[getter]
    fn preset_weights(&self) -> (f64, f64) {
        (self.config.gamma_kl, self.config.gamma_ent)
    }

    /// Score one `/score` request body and return the response JSON.
    fn score_json(&self, py: Python<'_>, request: &str) -> PyResult<String> {
        let quality = self
            .quality
            .clone()
            .ok_or_else(|| value_err("score_json needs quality_constant or quality_url"))?;
        let engine = reward::RewardEngine::new(self.tagger.clone(), quality, self.config)
            .map_err(value_err)?;
        py.detach(|| engine.score_json(request.as_bytes()))
            .map_err(|f| match f {
                ScoreFailure::Invalid(_) => value_err(&f),
                ScoreFailure::Scoring(_) => PyRuntimeError::new_err(f.to_string()),
            })
    }

    /// Score `candidates` against `history` (a list of `(role, text)`),
    /// with precomputed `quality` scores or the engine's quality source.
    #[pyo3(signature = (history, candidates, quality = None))]
    fn score_group<'py>(
        &self,
        py: Python<'py>,
        history: Vec<(String, String)>,
        candidates: Vec<String>,
        quality: Option<Vec<f64>>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let turns = history
            .into_iter()
            .map(|(r, t)| Ok(Turn::new(parse_role(&r)?, t)))
            .collect::<PyResult<Vec<_>>>()?;
        let group = RolloutGroup::new(turns, candidates).map_err(value_err)?;
        let counter = WhitespaceTokenCounter;
        let out = match (quality, &self.quality) {
            (Some(q), _) => py.detach(|| {
                reward::score_rollout_group_with_quality(
                    &group,
                    &*self.tagger,
                    &q,
                    &self.config,
                    &counter,
                )
            }),
            (None, Some(scorer)) => py.detach(|| {
                reward::score_rollout_group(
                    &group,
                    &*self.tagger,
                    &**scorer,
                    &self.config,
                    &counter,
                )
            }),
            (None, None) => return Err(value_err("no quality scores and no quality source")),
        }
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        out.iter().map(|b| breakdown_dict(py, b)).collect()
    }
}

#[pymodule(name = "tactic_reward")]
pub fn tactic_reward_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRewardEngine>()?;
    m.add(
        "PRESETS",
        Preset::ALL.iter().map(|p| p.name()).collect::<Vec<_>>(),
    )?;
    m.add_function(wrap_pyfunction!(tactic_names, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_counts, m)?)?;
    m.add_function(wrap_pyfunction!(kl_novelty, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_breadth, m)?)?;
    m.add_function(wrap_pyfunction!(minmax_normalize, m)?)?;
    m.add_function(wrap_pyfunction!(group_advantages, m)?)?;
    m.add_function(wrap_pyfunction!(length_penalty, m)?)?;
    m.add_function(wrap_pyfunction!(format_penalty, m)?)?;
    m.add_function(wrap_pyfunction!(keyword_tag, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_empathy, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(bigram_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(bleu2, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_corpus, m)?)?;
    Ok(())
}
