//! The corpus diagnostic report written by `tactic-reward analyze`.
//!
//! JSON and TSV renderings share one set of numbers; floats are rounded to
//! six significant digits and undefined quantities are `null` (JSON) or
//! `NA` (TSV).

use serde::Serialize;
use serde_json::Value;

use crate::dialogue::Conversation;
use crate::tactic::{TacticId, TacticSet};

use super::corpus::{
    conversation_stickiness, new_tactic_counts, stickiness, supporter_tactic_sets, AnalyticsError,
    Estimate,
};
use super::lexical::{bigram_overlap, bleu2};
use super::stats::spearman_test;

/// Conversation metadata keys treated as satisfaction ratings.
pub const SATISFACTION_KEYS: [&str; 4] =
    ["Successful", "Engaged", "PositiveInteraction", "UseAgain"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrevalenceRow {
    pub tactic: TacticId,
    pub value: Option<f64>,
    pub turns_with: u64,
    pub turns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StickinessRow {
    pub tactic: TacticId,
    pub given_present: Option<f64>,
    pub present_hits: u64,
    pub present_events: u64,
    pub given_absent: Option<f64>,
    pub absent_hits: u64,
    pub absent_events: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StickinessSection {
    pub defined: bool,
    pub pooled: Option<f64>,
    pub pooled_hits: u64,
    pub pooled_events: u64,
    pub macro_mean: Option<f64>,
    pub pooled_given_absent: Option<f64>,
    pub per_tactic: Vec<StickinessRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexicalSection {
    pub pairs: usize,
    pub bigram_jaccard_mean: Option<f64>,
    pub bleu2_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpearmanRow {
    /// `stickiness` or `new_tactics`, per conversation.
    pub measure: &'static str,
    pub rating: String,
    pub n: usize,
    pub rho: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub conversations: usize,
    pub supporter_turns: usize,
    pub pairs: usize,
    pub prevalence: Vec<PrevalenceRow>,
    pub stickiness: StickinessSection,
    pub tactics_per_turn: Option<f64>,
    pub new_tactics_per_turn: Option<f64>,
    pub lexical: LexicalSection,
    pub spearman: Vec<SpearmanRow>,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Numeric rating from a metadata value; yes/true map to 1, no/false to 0.
pub fn parse_rating(raw: &str) -> Option<f64> {
    let s = raw.trim();
    match s.to_ascii_lowercase().as_str() {
        "yes" | "true" => Some(1.0),
        "no" | "false" => Some(0.0),
        _ => s.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

/// Mean of a conversation's defined per-pair stickiness values.
fn average_pair_stickiness(sets: &[TacticSet]) -> Option<f64> {
    let values: Vec<f64> = sets
        .windows(2)
        .filter_map(|w| conversation_stickiness(w).value())
        .collect();
    mean(&values)
}

pub fn analyze(corpus: &[Conversation]) -> Result<AnalysisReport, AnalyticsError> {
    let sets: Vec<Vec<TacticSet>> = corpus
        .iter()
        .map(supporter_tactic_sets)
        .collect::<Result<_, _>>()?;
    let stick = stickiness(corpus)?;

    let flat: Vec<TacticSet> = sets.iter().flatten().copied().collect();
    let prevalence = TacticId::ALL
        .into_iter()
        .map(|t| {
            let with = flat.iter().filter(|s| s.contains(t)).count() as u64;
            let e = Estimate {
                hits: with,
                events: flat.len() as u64,
            };
            PrevalenceRow {
                tactic: t,
                value: e.value(),
                turns_with: with,
                turns: e.events,
            }
        })
        .collect();

    let per_tactic = stick
        .per_tactic
        .iter()
        .map(|s| StickinessRow {
            tactic: s.tactic,
            given_present: s.given_present.value(),
            present_hits: s.given_present.hits,
            present_events: s.given_present.events,
            given_absent: s.given_absent.value(),
            absent_hits: s.given_absent.hits,
            absent_events: s.given_absent.events,
        })
        .collect();

    let tactics: Vec<f64> = flat.iter().map(|s| s.len() as f64).collect();
    let new: Vec<f64> = sets
        .iter()
        .flat_map(|c| new_tactic_counts(c))
        .map(|n| n as f64)
        .collect();

    let (mut jaccard, mut bleu) = (Vec::new(), Vec::new());
    for conv in corpus {
        let texts: Vec<&str> = conv.supporter_turns().map(|t| t.text()).collect();
        for w in texts.windows(2) {
            jaccard.push(bigram_overlap(w[0], w[1]));
            bleu.push(bleu2(w[1], w[0]));
        }
    }

    let per_conv_stick: Vec<Option<f64>> =
        sets.iter().map(|s| average_pair_stickiness(s)).collect();
    let per_conv_new: Vec<Option<f64>> = sets
        .iter()
        .map(|s| {
            mean(
                &new_tactic_counts(s)
                    .iter()
                    .map(|&n| n as f64)
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let mut spearman = Vec::new();
    for (measure, values) in [
        ("stickiness", &per_conv_stick),
        ("new_tactics", &per_conv_new),
    ] {
        for key in SATISFACTION_KEYS {
            let ratings: Vec<Option<f64>> = corpus
                .iter()
                .map(|c| c.metadata.get(key).and_then(|v| parse_rating(v)))
                .collect();
            if ratings.iter().all(Option::is_none) {
                continue;
            }
            let (xs, ys): (Vec<f64>, Vec<f64>) = values
                .iter()
                .zip(&ratings)
                .filter_map(|(v, r)| Some(((*v)?, (*r)?)))
                .unzip();
            let test = spearman_test(&xs, &ys).ok();
            spearman.push(SpearmanRow {
                measure,
                rating: key.to_string(),
                n: xs.len(),
                rho: test.map(|t| t.rho),
                p_value: test.map(|t| t.p_value),
            });
        }
    }

    Ok(AnalysisReport {
        conversations: corpus.len(),
        supporter_turns: flat.len(),
        pairs: sets.iter().map(|c| c.len().saturating_sub(1)).sum(),
        prevalence,
        stickiness: StickinessSection {
            defined: stick.pooled.events > 0,
            pooled: stick.pooled.value(),
            pooled_hits: stick.pooled.hits,
            pooled_events: stick.pooled.events,
            macro_mean: stick.macro_mean,
            pooled_given_absent: stick.pooled_given_absent.value(),
            per_tactic,
        },
        tactics_per_turn: mean(&tactics),
        new_tactics_per_turn: mean(&new),
        lexical: LexicalSection {
            pairs: jaccard.len(),
            bigram_jaccard_mean: mean(&jaccard),
            bleu2_mean: mean(&bleu),
        },
        spearman,
    })
}

/// Round to six significant digits.
pub fn round_sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .map(round_sig6)
                .and_then(serde_json::Number::from_f64)
            {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        round_floats(&mut v);
        let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
        s.push('\n');
        s
    }

    /// Long-format table: `section  item  statistic  value  n`.
    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<[String; 5]> = Vec::new();
        let num =
            |x: Option<f64>| x.map_or_else(|| "NA".to_string(), |v| round_sig6(v).to_string());
        let mut row = |a: &str, b: &str, c: &str, v: String, n: u64| {
            rows.push([a.into(), b.into(), c.into(), v, n.to_string()]);
        };
        row(
            "corpus",
            "all",
            "conversations",
            self.conversations.to_string(),
            self.conversations as u64,
        );
        row(
            "corpus",
            "all",
            "supporter_turns",
            self.supporter_turns.to_string(),
            self.supporter_turns as u64,
        );
        row(
            "corpus",
            "all",
            "pairs",
            self.pairs.to_string(),
            self.pairs as u64,
        );
        for p in &self.prevalence {
            row(
                "prevalence",
                p.tactic.name(),
                "fraction",
                num(p.value),
                p.turns,
            );
        }
        let s = &self.stickiness;
        row(
            "stickiness",
            "pooled",
            "micro",
            num(s.pooled),
            s.pooled_events,
        );
        row(
            "stickiness",
            "pooled",
            "macro",
            num(s.macro_mean),
            s.pooled_events,
        );
        row(
            "stickiness",
            "pooled",
            "given_absent",
            num(s.pooled_given_absent),
            s.pooled_events,
        );
        for t in &s.per_tactic {
            row(
                "stickiness",
                t.tactic.name(),
                "given_present",
                num(t.given_present),
                t.present_events,
            );
            row(
                "stickiness",
                t.tactic.name(),
                "given_absent",
                num(t.given_absent),
                t.absent_events,
            );
        }
        row(
            "breadth",
            "all",
            "tactics_per_turn",
            num(self.tactics_per_turn),
            self.supporter_turns as u64,
        );
        row(
            "breadth",
            "all",
            "new_tactics_per_turn",
            num(self.new_tactics_per_turn),
            self.supporter_turns as u64,
        );
        let l = &self.lexical;
        row(
            "lexical",
            "pairs",
            "bigram_jaccard",
            num(l.bigram_jaccard_mean),
            l.pairs as u64,
        );
        row(
            "lexical",
            "pairs",
            "bleu2",
            num(l.bleu2_mean),
            l.pairs as u64,
        );
        for sp in &self.spearman {
            let item = format!("{}~{}", sp.measure, sp.rating);
            row("spearman", &item, "rho", num(sp.rho), sp.n as u64);
            row("spearman", &item, "p_value", num(sp.p_value), sp.n as u64);
        }

        let header = ["section", "item", "statistic", "value", "n"].map(String::from);
        let mut widths = header.clone().map(|h| h.len());
        for r in &rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        for r in std::iter::once(&header).chain(&rows) {
            let cells: Vec<String> = r
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(i, (c, w))| {
                    if i + 1 == r.len() {
                        c.clone()
                    } else {
                        format!("{c:<w$}")
                    }
                })
                .collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }
}
