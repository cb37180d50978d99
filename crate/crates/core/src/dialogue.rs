//! Conversation data model, rule-based sentence segmentation and the
//! line-delimited JSON corpus format.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::tactic::{TacticCounts, TacticSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Seeker,
    Supporter,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Seeker => "seeker",
            Role::Supporter => "supporter",
        })
    }
}

#[derive(Debug, Error)]
pub enum TurnError {
    #[error("tags are only allowed on supporter turns")]
    TagsOnSeeker,
    #[error("turn has {sentences} sentences but {tags} tag vectors")]
    TagCountMismatch { sentences: usize, tags: usize },
}

/// One message in a conversation.
#[derive(Debug, Clone, PartialEq)]
pub struct Turn {
    role: Role,
    text: String,
    sentences: Vec<String>,
    tags: Option<Vec<TacticSet>>,
    counts: Option<TacticCounts>,
}

impl Turn {
    pub fn new(role: Role, text: impl Into<String>) -> Self {
        let text = text.into();
        let sentences = segment_sentences(&text);
        Turn {
            role,
            text,
            sentences,
            tags: None,
            counts: None,
        }
    }

    pub fn seeker(text: impl Into<String>) -> Self {
        Self::new(Role::Seeker, text)
    }

    pub fn supporter(text: impl Into<String>) -> Self {
        Self::new(Role::Supporter, text)
    }

    /// Attach per-sentence tags (one set per segmented sentence). Counts are
    /// recomputed from the tags; existing tags are overwritten.
    pub fn with_tags(mut self, tags: Vec<TacticSet>) -> Result<Self, TurnError> {
        self.set_tags(tags)?;
        Ok(self)
    }

    pub fn set_tags(&mut self, tags: Vec<TacticSet>) -> Result<(), TurnError> {
        if self.role != Role::Supporter {
            return Err(TurnError::TagsOnSeeker);
        }
        if tags.len() != self.sentences.len() {
            return Err(TurnError::TagCountMismatch {
                sentences: self.sentences.len(),
                tags: tags.len(),
            });
        }
        self.counts = Some(TacticCounts::from_sentence_tags(&tags));
        self.tags = Some(tags);
        Ok(())
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn sentences(&self) -> &[String] {
        &self.sentences
    }

    pub fn tags(&self) -> Option<&[TacticSet]> {
        self.tags.as_deref()
    }

    pub fn counts(&self) -> Option<&TacticCounts> {
        self.counts.as_ref()
    }

    pub fn is_supporter(&self) -> bool {
        self.role == Role::Supporter
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conversation {
    pub id: String,
    pub turns: Vec<Turn>,
    pub metadata: BTreeMap<String, String>,
    /// Top-level fields outside the schema, kept so records round-trip.
    pub extra: BTreeMap<String, Value>,
}

impl Conversation {
    pub fn new(id: impl Into<String>, turns: Vec<Turn>) -> Self {
        Conversation {
            id: id.into(),
            turns,
            metadata: BTreeMap::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn supporter_turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| t.is_supporter())
    }
}

/// Consecutive pairs within the supporter subsequence of a conversation.
/// Seeker turns in between do not break a pair.
pub fn supporter_turn_pairs(conv: &Conversation) -> Vec<(&Turn, &Turn)> {
    let supporters: Vec<&Turn> = conv.supporter_turns().collect();
    supporters.windows(2).map(|w| (w[0], w[1])).collect()
}

// ---------------------------------------------------------------------------
// Sentence segmentation
// ---------------------------------------------------------------------------

/// Lowercased tokens (including the trailing period) never treated as a
/// sentence end.
const ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.", "vs.", "e.g.", "i.e.", "etc.",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

fn is_opening_quote(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201c}' | '\u{2018}')
}

/// Split text into sentences on `.`, `!` or `?` (runs allowed, optionally
/// followed by closing quotes/brackets) when followed by whitespace and then
/// an uppercase letter or an opening quote. Known abbreviations never end a
/// sentence. Segments are trimmed; empty segments are dropped.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;

    while i < chars.len() {
        if !is_terminal(chars[i].1) {
            i += 1;
            continue;
        }
        let punct_pos = i;
        let mut j = i;
        while j < chars.len() && is_terminal(chars[j].1) {
            j += 1;
        }
        while j < chars.len() && is_closing(chars[j].1) {
            j += 1;
        }
        // j is one past the sentence end; require whitespace then a starter.
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let boundary = k > j
            && k < chars.len()
            && (chars[k].1.is_uppercase() || is_opening_quote(chars[k].1))
            && !ends_with_abbreviation(&chars, punct_pos);
        if boundary {
            let end = chars[j].0;
            push_segment(&mut out, &text[start..end]);
            start = chars[k].0;
            i = k;
        } else {
            i = j.max(i + 1);
        }
    }
    push_segment(&mut out, &text[start..]);
    out
}

fn push_segment(out: &mut Vec<String>, seg: &str) {
    let seg = seg.trim();
    if !seg.is_empty() {
        out.push(seg.to_string());
    }
}

/// Whether the whitespace-delimited word ending at `punct_pos` (inclusive) is
/// a known abbreviation. Only a single `.` qualifies.
fn ends_with_abbreviation(chars: &[(usize, char)], punct_pos: usize) -> bool {
    if chars[punct_pos].1 != '.' {
        return false;
    }
    if punct_pos + 1 < chars.len() && is_terminal(chars[punct_pos + 1].1) {
        return false;
    }
    let mut s = punct_pos;
    while s > 0 && !chars[s - 1].1.is_whitespace() {
        s -= 1;
    }
    let word: String = chars[s..=punct_pos]
        .iter()
        .map(|(_, c)| c.to_ascii_lowercase())
        .skip_while(|c| is_opening_quote(*c) || *c == '(')
        .collect();
    ABBREVIATIONS.contains(&word.as_str())
}

// ---------------------------------------------------------------------------
// Corpus JSONL
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct TurnRecord {
    role: Role,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tags: Option<Vec<Vec<u8>>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConversationRecord {
    id: String,
    turns: Vec<TurnRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metadata: Option<BTreeMap<String, Value>>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

/// A line that failed to parse or validate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineDiagnostic {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Default)]
pub struct LoadedCorpus {
    pub conversations: Vec<Conversation>,
    pub diagnostics: Vec<LineDiagnostic>,
}

/// Parse a single JSONL record.
pub fn parse_conversation(line: &str) -> Result<Conversation, String> {
    let rec: ConversationRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if rec.turns.is_empty() {
        return Err("conversation has no turns".into());
    }
    let mut turns = Vec::with_capacity(rec.turns.len());
    for (i, t) in rec.turns.into_iter().enumerate() {
        let mut turn = Turn::new(t.role, t.text);
        if let Some(raw) = t.tags {
            let sets = raw
                .iter()
                .map(|v| TacticSet::from_vector(v))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| format!("turn {i}: {e}"))?;
            turn.set_tags(sets).map_err(|e| format!("turn {i}: {e}"))?;
        }
        turns.push(turn);
    }
    let mut metadata = BTreeMap::new();
    for (k, v) in rec.metadata.unwrap_or_default() {
        let s = match v {
            Value::String(s) => s,
            Value::Number(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            other => return Err(format!("metadata `{k}` must be a scalar, got {other}")),
        };
        metadata.insert(k, s);
    }
    Ok(Conversation {
        id: rec.id,
        turns,
        metadata,
        extra: rec.extra,
    })
}

/// Load a corpus, collecting per-line diagnostics instead of aborting.
/// Blank lines are skipped.
pub fn load_corpus<R: BufRead>(reader: R) -> std::io::Result<LoadedCorpus> {
    let mut out = LoadedCorpus::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_conversation(&line) {
            Ok(c) => out.conversations.push(c),
            Err(message) => out.diagnostics.push(LineDiagnostic {
                line: i + 1,
                message,
            }),
        }
    }
    Ok(out)
}

/// Serialize one conversation as a single JSON line (no trailing newline).
pub fn conversation_to_json(conv: &Conversation) -> String {
    let rec = ConversationRecord {
        id: conv.id.clone(),
        turns: conv
            .turns
            .iter()
            .map(|t| TurnRecord {
                role: t.role,
                text: t.text.clone(),
                tags: t
                    .tags
                    .as_ref()
                    .map(|tags| tags.iter().map(|s| s.to_vector().to_vec()).collect()),
            })
            .collect(),
        metadata: if conv.metadata.is_empty() {
            None
        } else {
            Some(
                conv.metadata
                    .iter()
                    .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                    .collect(),
            )
        },
        extra: conv.extra.clone(),
    };
    serde_json::to_string(&rec).expect("conversation records always serialize")
}

pub fn write_corpus<W: Write>(
    mut writer: W,
    conversations: &[Conversation],
) -> std::io::Result<()> {
    for c in conversations {
        writeln!(writer, "{}", conversation_to_json(c))?;
    }
    Ok(())
}
