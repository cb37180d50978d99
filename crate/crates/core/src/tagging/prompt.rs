//! Prompt templates for the per-tactic taggers, the emotional-support
//! filter judges and the turn-level empathy judge, plus parsers for their
//! delimited replies.

use thiserror::Error;

use crate::dialogue::Role;
use crate::tactic::TacticId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerdictError {
    #[error("no <{tag}>...</{tag}> span in reply: {raw:?}")]
    MissingTag { tag: &'static str, raw: String },
    #[error("empty <{tag}> span in reply: {raw:?}")]
    Empty { tag: &'static str, raw: String },
    #[error("unparseable verdict {content:?} in reply: {raw:?}")]
    Unparseable { content: String, raw: String },
    #[error("score {value} outside {min}..={max} in reply: {raw:?}")]
    OutOfRange {
        value: i64,
        min: i64,
        max: i64,
        raw: String,
    },
}

/// Substitute `{name}` placeholders in one pass. Substituted values are never
/// rescanned, so braces inside values come through literally. Unknown
/// placeholders are left as-is.
pub fn render_template(template: &str, values: &[(&str, &str)]) -> String {
    let mut out =
        String::with_capacity(template.len() + values.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let replaced = after.find('}').and_then(|close| {
            let key = &after[..close];
            values
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| (close, *v))
        });
        match replaced {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Instruction text describing one tactic, substituted into the tagger prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TacticDefinition {
    pub tactic: TacticId,
    pub definition_text: String,
}

impl TacticDefinition {
    pub fn new(tactic: TacticId, definition_text: impl Into<String>) -> Self {
        TacticDefinition {
            tactic,
            definition_text: definition_text.into(),
        }
    }

    /// Built-in definition for a tactic.
    pub fn builtin(tactic: TacticId) -> Self {
        let text = match tactic {
            TacticId::Advice => {
                "Advice means suggesting concrete actions, solutions or coping strategies the person could try."
            }
            TacticId::Assistance => {
                "Assistance means the speaker offers to personally do something for or with the person, or to connect them with someone who can help."
            }
            TacticId::EmotionalExpression => {
                "Emotional Expression means the speaker communicates their own feelings, reactions or thoughts in response to the person's story, including emojis or emoticons."
            }
            TacticId::Empowerment => {
                "Empowerment means positive, uplifting statements about the person's character or their ability to handle the situation."
            }
            TacticId::Information => {
                "Information means offering facts, resources, links or contacts, or statements presented as factual that are meant to help."
            }
            TacticId::Paraphrasing => {
                "Paraphrasing means restating or reflecting back what the person said or felt to show the speaker understood their situation."
            }
            TacticId::Questioning => {
                "Questioning means asking questions to better understand the person's feelings, experiences or situation."
            }
            TacticId::Reappraisal => {
                "Reappraisal means prompting the person to think about their situation differently in order to change how it affects them emotionally."
            }
            TacticId::SelfDisclosure => {
                "Self-Disclosure means the speaker shares personal information or similar past feelings or experiences of their own."
            }
            TacticId::Validation => {
                "Validation means reassuring, normalizing or affirming the person's feelings as understandable and legitimate."
            }
        };
        TacticDefinition::new(tactic, text)
    }

    pub fn builtin_all() -> Vec<TacticDefinition> {
        TacticId::ALL.into_iter().map(Self::builtin).collect()
    }
}

pub const TAGGER_TEMPLATE: &str = "You are a Fair Tagger Assistant, responsible for providing precise, objective tagging based on predefined criteria. Your task is to assess whether a given sentence contains {Tactic}, ensuring consistency and adherence to strict tagging guidelines.

### Instruction:
1. You will be provided with a full empathic response for context and a single sentence extracted from it. Your task is to determine whether the given sentence contains \"{Tactic}\".
2. {tactic_definition}
3. Read the sentence and then provide a rating of 0 or 1, with 0 signifying that \"{Tactic}\" is not present in the sentence and 1 signifying that \"{Tactic}\" is present in the sentence. Your response should be in the following format: <score>[]</score>
4. Importantly, the full empathic response is provided as context, and the sentence in question is provided separately. Only the given sentence should be assessed for \"{Tactic}\", not the entire response.

### Input:
- Context (Full Empathic Response): {Full_Response}
- Sentence to Evaluate: {Sentence}

### Response:
";

pub fn build_tagger_prompt(
    tactic: TacticId,
    definition: &TacticDefinition,
    full_response: &str,
    sentence: &str,
) -> String {
    render_template(
        TAGGER_TEMPLATE,
        &[
            ("Tactic", tactic.display_name()),
            ("tactic_definition", &definition.definition_text),
            ("Full_Response", full_response),
            ("Sentence", sentence),
        ],
    )
}

pub const FILTER_TEMPLATE: &str = "You are a model for analyzing the emotional content of chatbot conversations.
You will be presented with a message or conversation snippet from a conversation between a user and a chatbot (\"assistant\").
Your classification task is entitled \"Seeking Emotional Support\". Specifically, we want to know: Is the user seeking emotional support or comfort in this message (e.g., \"I feel down, help me\")?

The following are the criteria for your classification:
- The user asks for emotional support: Example: \"I'm feeling down, can you help me feel better?\"
- The user says they need someone to talk to: Example: \"I just need to vent; please listen to me.\"

Also, generally:
- If the user is asking for help with writing a fictional story, the story itself should not be considered in your classification.
- Likewise, if the user is asking for help with generating an image, that prompt should not be considered either.
- It is possible that the message or conversation snippet in question has no emotional content. In this case, you should classify it as \"no\".
- If the message is extremely short, you may classify it as \"no\" if you believe there is not enough information to make a classification.

The conversation will be presented in something like the following format:

[USER]: (user's message)
[ASSISTANT]: (chatbot's message)
[*USER*]: (user's message)

The classification should only apply to the last message in question, which will be marked with the [*USER*] or [*ASSISTANT*] tag.
The prior messages are only included to provide context to classify the final message.

Now, the following is the conversation snippet you will be analyzing:

<snippet>
{snippet_string}
</snippet>

Once again, the classification task is: Is the user seeking emotional support or comfort in this message?
Output your classification (yes=true / no=false). This should be your *only* output, and the format of your output should be strictly as follows: <label>[yes/no]</label>.
";

/// Number of leading messages shown to the filter judges.
pub const FILTER_SNIPPET_MESSAGES: usize = 3;

/// `[USER]: ...` / `[ASSISTANT]: ...` lines for the first three messages,
/// the last one starred. Seekers are users, supporters assistants.
pub fn build_filter_snippet(messages: &[(Role, &str)]) -> String {
    let shown = &messages[..messages.len().min(FILTER_SNIPPET_MESSAGES)];
    shown
        .iter()
        .enumerate()
        .map(|(i, (role, text))| {
            let name = match role {
                Role::Seeker => "USER",
                Role::Supporter => "ASSISTANT",
            };
            if i + 1 == shown.len() {
                format!("[*{name}*]: {text}")
            } else {
                format!("[{name}]: {text}")
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn build_filter_prompt(messages: &[(Role, &str)]) -> String {
    render_template(
        FILTER_TEMPLATE,
        &[("snippet_string", &build_filter_snippet(messages))],
    )
}

fn extract_tag<'a>(reply: &'a str, tag: &'static str) -> Result<&'a str, VerdictError> {
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let start = reply.find(&open).ok_or_else(|| VerdictError::MissingTag {
        tag,
        raw: reply.to_string(),
    })? + open.len();
    let len = reply[start..]
        .find(&close)
        .ok_or_else(|| VerdictError::MissingTag {
            tag,
            raw: reply.to_string(),
        })?;
    let content = reply[start..start + len].trim();
    if content.is_empty() {
        return Err(VerdictError::Empty {
            tag,
            raw: reply.to_string(),
        });
    }
    Ok(content)
}

/// Integer in the first `<score>` span, required to lie in `min..=max`.
pub fn parse_score_in_range(reply: &str, min: i64, max: i64) -> Result<i64, VerdictError> {
    let content = extract_tag(reply, "score")?;
    let value: i64 = content.parse().map_err(|_| VerdictError::Unparseable {
        content: content.to_string(),
        raw: reply.to_string(),
    })?;
    if !(min..=max).contains(&value) {
        return Err(VerdictError::OutOfRange {
            value,
            min,
            max,
            raw: reply.to_string(),
        });
    }
    Ok(value)
}

/// Binary tagger verdict from the first `<score>` span: exactly `0` or `1`.
pub fn parse_score_tag(reply: &str) -> Result<u8, VerdictError> {
    let content = extract_tag(reply, "score")?;
    match content {
        "0" => Ok(0),
        "1" => Ok(1),
        _ => Err(VerdictError::Unparseable {
            content: content.to_string(),
            raw: reply.to_string(),
        }),
    }
}

/// Judge label from the first `<label>` span: yes/no (or true/false),
/// case-insensitive, optionally wrapped in square brackets.
pub fn parse_label(reply: &str) -> Result<bool, VerdictError> {
    let content = extract_tag(reply, "label")?;
    let inner = content
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .unwrap_or(content)
        .trim()
        .to_ascii_lowercase();
    match inner.as_str() {
        "yes" | "true" => Ok(true),
        "no" | "false" => Ok(false),
        _ => Err(VerdictError::Unparseable {
            content: content.to_string(),
            raw: reply.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn questioning_prompt(sentence: &str) -> String {
        build_tagger_prompt(
            TacticId::Questioning,
            &TacticDefinition::builtin(TacticId::Questioning),
            "How are you? I care.",
            sentence,
        )
    }

    #[test]
    fn tagger_prompt_fills_all_fields() {
        let p = questioning_prompt("How are you?");
        assert!(p.contains("- Context (Full Empathic Response): How are you? I care.\n"));
        assert!(p.contains("- Sentence to Evaluate: How are you?\n"));
        assert!(p.starts_with("You are a Fair Tagger Assistant"));
        assert!(p.contains("contains Questioning, ensuring"));
        assert!(p.contains("Only the given sentence should be assessed for \"Questioning\", not the entire response."));
        assert!(p.contains("<score>[]</score>"));
        assert!(!p.contains("{Tactic}") && !p.contains("{Sentence}"));
        assert_eq!(p, questioning_prompt("How are you?"));
    }

    #[test]
    fn braces_in_values_are_not_substituted() {
        let p = build_tagger_prompt(
            TacticId::Advice,
            &TacticDefinition::new(TacticId::Advice, "def {Sentence}"),
            "{Tactic} {Full_Response}",
            "try {Sentence} {",
        );
        assert!(p.contains("2. def {Sentence}\n"));
        assert!(p.contains("Context (Full Empathic Response): {Tactic} {Full_Response}\n"));
        assert!(p.contains("Sentence to Evaluate: try {Sentence} {\n"));
    }

    #[test]
    fn render_leaves_unknown_placeholders() {
        assert_eq!(render_template("a {x} {y} {", &[("x", "1")]), "a 1 {y} {");
    }

    #[test]
    fn score_tag_parsing() {
        assert_eq!(parse_score_tag("<score>1</score>"), Ok(1));
        assert_eq!(
            parse_score_tag("Sure! <score>0</score> Hope that helps."),
            Ok(0)
        );
        assert_eq!(parse_score_tag("<score> 1 </score><score>0</score>"), Ok(1));
        assert!(matches!(
            parse_score_tag("<score>maybe</score>"),
            Err(VerdictError::Unparseable { .. })
        ));
        assert!(matches!(
            parse_score_tag("<score></score>"),
            Err(VerdictError::Empty { .. })
        ));
        assert!(matches!(
            parse_score_tag("1"),
            Err(VerdictError::MissingTag { .. })
        ));
        assert!(matches!(
            parse_score_tag("<score>1"),
            Err(VerdictError::MissingTag { .. })
        ));
        assert!(parse_score_tag("<score>2</score>").is_err());
    }

    #[test]
    fn ranged_score_parsing() {
        assert_eq!(parse_score_in_range("<score>4</score>", 1, 5), Ok(4));
        assert!(matches!(
            parse_score_in_range("<score>7</score>", 1, 5),
            Err(VerdictError::OutOfRange { value: 7, .. })
        ));
        assert!(parse_score_in_range("<score>3.5</score>", 1, 5).is_err());
    }

    #[test]
    fn label_parsing() {
        assert_eq!(parse_label("<label>yes</label>"), Ok(true));
        assert_eq!(parse_label("<label>[No]</label>"), Ok(false));
        assert_eq!(parse_label("<label>TRUE</label>"), Ok(true));
        assert!(parse_label("<label>perhaps</label>").is_err());
        assert!(parse_label("yes").is_err());
    }

    #[test]
    fn filter_snippet_marks_last_message() {
        let msgs = [
            (Role::Seeker, "I feel awful."),
            (Role::Supporter, "I'm sorry."),
            (Role::Seeker, "Can we talk?"),
            (Role::Supporter, "Sure."),
        ];
        assert_eq!(
            build_filter_snippet(&msgs),
            "[USER]: I feel awful.\n[ASSISTANT]: I'm sorry.\n[*USER*]: Can we talk?"
        );
        let p = build_filter_prompt(&msgs);
        assert!(p.contains("<snippet>\n[USER]: I feel awful."));
        assert!(p.contains("<label>[yes/no]</label>"));
        assert!(p.contains("\"Seeking Emotional Support\""));
    }
}
