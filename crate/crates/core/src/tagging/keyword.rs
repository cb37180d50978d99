//! Deterministic keyword/pattern tagger used offline and in tests.
//!
//! Rules (matched on the lowercased sentence, curly apostrophes folded):
//!
//! | tactic | fires on |
//! |---|---|
//! | questioning | sentence ends with `?` |
//! | advice | leading `try`/`consider`/`talk to`/`get`/`go`/`take`/`make sure`, or `you should`, `you might want to`, `if i were you`, `i'd suggest` ... |
//! | assistance | `i'm here`, `can i help`, `can i do anything`, `let me know if`, `come stay with me`, `you can borrow my` |
//! | emotional_expression | `i'm sorry`, `sorry to hear`, `wow`, `oh no`, `i'm so happy`, `what a <adj>`, emoticons/emoji |
//! | empowerment | `you're strong`, `get through this`, `you're going to succeed`, `you've got this`, `proud of you` |
//! | information | URLs, `research shows`, `studies show`, `link to`, `hotline`, phone numbers, `is good for your`, `the safest`, `according to` |
//! | paraphrasing | `it sounds like`, `i hear`, `i'm hearing`, `you must be`, `you said`, `it seems like you` |
//! | reappraisal | `not your fault`, `out of your control`, `is temporary`, `doesn't mean`, `another way to look at` |
//! | self_disclosure | `i've`/`i have` + felt/had/been/experienced..., `happened to me`, `when i was`, `me too`, `i have <family member>` |
//! | validation | `your feelings are valid`, `it's okay to`, `it's normal to`, `everyone has`, `i know it's hard`, `you're not overreacting`, `i hear/feel/see you`, `makes sense`, `you're not alone` |
//!
//! Several tactics may fire on one sentence.

use std::sync::LazyLock;

use regex::Regex;

use crate::dialogue::segment_sentences;
use crate::tactic::{TacticCounts, TacticId, TacticSet};

use super::{TagError, TaggedTurn, TurnTagger};

struct Rule {
    tactic: TacticId,
    pattern: Regex,
}

static RULES: LazyLock<Vec<Rule>> = LazyLock::new(|| {
    let table: [(TacticId, &str); 9] = [
        (
            TacticId::Advice,
            r"^(?:(?:maybe|perhaps|definitely|honestly|also|so|and|but|please)[,]?\s+)?(?:try|consider|talk to|get|go|take|make sure|don't forget to|remember to)\b|\byou should\b|\byou (?:might|may) want to\b|\byou could try\b|\bif i were you\b|\bi(?:'d| would) (?:suggest|recommend)\b|\bi recommend\b|\bit (?:might|may|could) help to\b",
        ),
        (
            TacticId::Assistance,
            r"\bi(?:'m| am) here\b|\b(?:can|could|may) i (?:help|do anything)\b|\bhow can i help\b|\blet me know if\b|\bcome stay with me\b|\byou can borrow my\b|\bi(?:'d| would) be happy to help\b",
        ),
        (
            TacticId::EmotionalExpression,
            r"\bi(?:'m| am) (?:so |really |very |truly )?(?:sorry|happy for you|sad to hear|glad to hear)\b|\bsorry to hear\b|\bwow\b|\boh no\b|\bwhat an? (?:beautiful|wonderful|lovely|terrible|awful|amazing|great)\b|\bthat(?:'s| is) (?:awful|terrible|heartbreaking|amazing|wonderful)\b|:\)|:\(|:-\)|<3|[\x{1F300}-\x{1FAFF}\x{2600}-\x{27BF}]",
        ),
        (
            TacticId::Empowerment,
            r"\byou(?:'re| are) (?:so |really |very |incredibly )?(?:strong|brave|capable|resilient)\b|\b(?:get|make it|got) through (?:this|it)\b|\byou(?:'re| are) going to (?:succeed|be okay|be ok|make it|do great)\b|\byou(?:'ve| have) got this\b|\bi believe in you\b|\bproud of you\b|\byou can do (?:this|it)\b",
        ),
        (
            TacticId::Information,
            r"https?://|\bwww\.|\b(?:research|studies|science|evidence) (?:shows?|suggests?)\b|\blink to\b|\bhotline\b|\bphone number\b|\b\d{3}[-\s]\d{3}[-\s]?\d{4}\b|\bis good for your\b|\bthe safest\b|\baccording to\b|\bstatistically\b",
        ),
        (
            TacticId::Paraphrasing,
            r"\bit sounds like\b|\bsounds like you\b|\bi hear\b|\bi(?:'m| am) hearing\b|\byou must (?:be|feel|have)\b|\byou said\b|\bit seems like you\b",
        ),
        (
            TacticId::Reappraisal,
            r"\bnot your fault\b|\b(?:wasn't|isn't|was not|is not) your fault\b|\bout of your control\b|\bis (?:only )?temporary\b|\b(?:doesn't|does not) mean\b|\banother way to (?:look|see|think)\b|\bdoesn't define you\b",
        ),
        (
            TacticId::SelfDisclosure,
            r"\bi(?:'ve| have) (?:also |often |once |personally )?(?:felt|had|been through|gone through|experienced|dealt|struggled|lost|faced)\b|\bhappen(?:ed)? to me\b|\bwhen i was\b|\bme too\b|\bi have (?:a |an |two |three |four |\d+ )?(?:kids|children|sons?|daughters?|brothers?|sisters?|husband|wife|partner)\b|\bin my experience\b|\bi used to\b",
        ),
        (
            TacticId::Validation,
            r"\b(?:your|those|these) feelings are (?:valid|normal|understandable)\b|\bit(?:'s| is) (?:completely |totally |perfectly )?(?:okay|ok|normal|natural|understandable) to\b|\beveryone (?:has|feels|gets)\b|\bi know it(?:'s| is) hard\b|\byou(?:'re| are) not overreacting\b|\bi (?:hear|feel|see) you\b|\b(?:that|it) makes (?:total |complete )?sense\b|\byou(?:'re| are) not alone\b|\banyone would feel\b",
        ),
    ];
    table
        .into_iter()
        .map(|(tactic, re)| Rule {
            tactic,
            pattern: Regex::new(re).expect("keyword rule compiles"),
        })
        .collect()
});

fn normalize(sentence: &str) -> String {
    sentence
        .trim()
        .chars()
        .map(|c| match c {
            '\u{2019}' | '\u{2018}' => '\'',
            c => c,
        })
        .collect::<String>()
        .to_lowercase()
}

fn ends_with_question(sentence: &str) -> bool {
    sentence
        .trim_end_matches(|c: char| {
            c.is_whitespace() || matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}')
        })
        .ends_with('?')
}

/// Tactic set fired by the keyword rules for one sentence.
pub fn keyword_tag_sentence(sentence: &str) -> TacticSet {
    let norm = normalize(sentence);
    let mut set = TacticSet::empty();
    if ends_with_question(&norm) {
        set.insert(TacticId::Questioning);
    }
    for rule in RULES.iter() {
        if rule.pattern.is_match(&norm) {
            set.insert(rule.tactic);
        }
    }
    set
}

/// Tagger backed by [`keyword_tag_sentence`].
#[derive(Debug, Clone, Copy, Default)]
pub struct KeywordTagger;

impl TurnTagger for KeywordTagger {
    fn tag_turn(&self, text: &str) -> Result<TaggedTurn, TagError> {
        let sentences = segment_sentences(text);
        let tags: Vec<TacticSet> = sentences.iter().map(|s| keyword_tag_sentence(s)).collect();
        let counts = TacticCounts::from_sentence_tags(&tags);
        Ok(TaggedTurn {
            sentences,
            tags,
            counts,
        })
    }
}
