//! Turn-level empathy judging: the six scored dimensions, their aggregate,
//! and the judge prompt.

use serde::{Deserialize, Serialize};

use crate::tagging::{parse_score_in_range, render_template, VerdictError};

use super::corpus::AnalyticsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmpathyDimension {
    Validating,
    Elaboration,
    Understanding,
    UnsolicitedAdvice,
    SelfOriented,
    Dismissing,
}

impl EmpathyDimension {
    pub const ALL: [EmpathyDimension; 6] = [
        EmpathyDimension::Validating,
        EmpathyDimension::Elaboration,
        EmpathyDimension::Understanding,
        EmpathyDimension::UnsolicitedAdvice,
        EmpathyDimension::SelfOriented,
        EmpathyDimension::Dismissing,
    ];

    /// Whether a higher score is better.
    pub fn is_positive(self) -> bool {
        matches!(
            self,
            EmpathyDimension::Validating
                | EmpathyDimension::Elaboration
                | EmpathyDimension::Understanding
        )
    }

    pub fn display_name(self) -> &'static str {
        match self {
            EmpathyDimension::Validating => "Validating Emotions",
            EmpathyDimension::Elaboration => "Encouraging Elaboration",
            EmpathyDimension::Understanding => "Demonstrating Understanding",
            EmpathyDimension::UnsolicitedAdvice => "Unsolicited Advice Giving",
            EmpathyDimension::SelfOriented => "Self-Oriented",
            EmpathyDimension::Dismissing => "Dismissing Emotions",
        }
    }

    /// The judge question, with its examples.
    pub fn question(self) -> &'static str {
        match self {
            EmpathyDimension::Validating => "To what extent did the supporter validate their partner's emotions? Examples of validating emotions include: \"You must be so angry\" or \"It's completely normal to feel discouraged\"",
            EmpathyDimension::Elaboration => "To what extent did the supporter encourage elaboration and ask questions of their partner? Examples of encouraging elaboration include: \"Can you tell me more about how you're feeling?\" or \"What makes you feel this way?\"",
            EmpathyDimension::Understanding => "To what extent did the supporter demonstrate their understanding via paraphrasing to their partner? Examples of demonstrating understanding via paraphrasing include: \"I hear how disappointing this setback is for you\" or \"It makes sense to question things after putting in so much effort\"",
            EmpathyDimension::UnsolicitedAdvice => "To what extent did the supporter provide unsolicited advice to their partner? Examples of unsolicited advice include: \"Get yourself a good night's sleep\" or \"You should try looking for other opportunities\"",
            EmpathyDimension::SelfOriented => "To what extent did the supporter shift the focus to themselves? Examples of shifting focus to oneself include: \"I have been in that position as well\" or \"When this happened to me...\"",
            EmpathyDimension::Dismissing => "To what extent did the supporter dismiss their partner's emotions? Examples of dismissing emotions include: \"Don't worry about it\" or \"It's not a big deal in the long run\"",
        }
    }
}

/// Shared 1-5 scale for every dimension.
pub const JUDGE_RUBRIC: &str =
    "1 = Not at all, 2 = Slightly, 3 = Moderately, 4 = Considerably, 5 = Very much";

pub const JUDGE_TEMPLATE: &str = "{framework}

### Few Shot Examples:
{few_shot}

### Now assess this supporter turn:

- Conversation History:
{history}

- Current Turn:
{current_turn}

### Question and Grading Rubric:
{question}
{rubric}

Respond with your score inside <score></score> tags, e.g. <score>3</score>.";

/// Fill the judge template. Placeholder-like text inside the arguments is
/// left alone.
pub fn build_judge_prompt(
    framework: &str,
    few_shot: &str,
    history: &str,
    current_turn: &str,
    question: &str,
    rubric: &str,
) -> String {
    render_template(
        JUDGE_TEMPLATE,
        &[
            ("framework", framework),
            ("few_shot", few_shot),
            ("history", history),
            ("current_turn", current_turn),
            ("question", question),
            ("rubric", rubric),
        ],
    )
}

/// Judge prompt for one dimension with its built-in question and rubric.
pub fn build_dimension_prompt(
    dimension: EmpathyDimension,
    framework: &str,
    few_shot: &str,
    history: &str,
    current_turn: &str,
) -> String {
    build_judge_prompt(
        framework,
        few_shot,
        history,
        current_turn,
        dimension.question(),
        JUDGE_RUBRIC,
    )
}

/// Judge score from the first `<score>` span; must be an integer in 1..=5.
pub fn parse_judge_score(reply: &str) -> Result<u8, VerdictError> {
    parse_score_in_range(reply, 1, 5).map(|v| v as u8)
}

/// Mean judge scores on the six dimensions, each in [1, 5].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpathyScores {
    pub validating: f64,
    pub elaboration: f64,
    pub understanding: f64,
    pub unsolicited_advice: f64,
    pub self_oriented: f64,
    pub dismissing: f64,
}

impl EmpathyScores {
    pub fn new(
        validating: f64,
        elaboration: f64,
        understanding: f64,
        unsolicited_advice: f64,
        self_oriented: f64,
        dismissing: f64,
    ) -> Result<Self, AnalyticsError> {
        let s = EmpathyScores {
            validating,
            elaboration,
            understanding,
            unsolicited_advice,
            self_oriented,
            dismissing,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn get(&self, d: EmpathyDimension) -> f64 {
        match d {
            EmpathyDimension::Validating => self.validating,
            EmpathyDimension::Elaboration => self.elaboration,
            EmpathyDimension::Understanding => self.understanding,
            EmpathyDimension::UnsolicitedAdvice => self.unsolicited_advice,
            EmpathyDimension::SelfOriented => self.self_oriented,
            EmpathyDimension::Dismissing => self.dismissing,
        }
    }

    pub fn validate(&self) -> Result<(), AnalyticsError> {
        for d in EmpathyDimension::ALL {
            let v = self.get(d);
            if !(1.0..=5.0).contains(&v) {
                return Err(AnalyticsError::InvalidInput(format!(
                    "{} score {v} outside [1, 5]",
                    d.display_name()
                )));
            }
        }
        Ok(())
    }
}

/// Mean of the positive dimensions and the reverse-coded (`6 - x`)
/// negative ones.
pub fn aggregate_empathy(scores: &EmpathyScores) -> Result<f64, AnalyticsError> {
    scores.validate()?;
    let sum: f64 = EmpathyDimension::ALL
        .iter()
        .map(|&d| {
            let v = scores.get(d);
            if d.is_positive() {
                v
            } else {
                6.0 - v
            }
        })
        .sum();
    Ok(sum / 6.0)
}
