//! Majority-vote emotional-support filter over a panel of three judges.

use std::thread;

use thiserror::Error;

use crate::dialogue::Role;
use crate::http::{ClientError, CompletionClient};

use super::prompt::{build_filter_prompt, parse_label, VerdictError};

pub const PANEL_SIZE: usize = 3;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FilterError {
    #[error("at least one message is required")]
    NoMessages,
    #[error("judge {judge} request failed: {source}")]
    Client { judge: usize, source: ClientError },
    #[error("judge {judge} gave an unparseable label: {source}")]
    Verdict { judge: usize, source: VerdictError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterOutcome {
    pub retained: bool,
    pub verdicts: [bool; PANEL_SIZE],
}

/// Ask all three judges about the first three messages and keep the
/// conversation when at least two say yes. Any judge failure or unparseable
/// label fails the whole decision; there is no majority over fewer judges.
pub fn filter_emotional_support(
    messages: &[(Role, &str)],
    judges: [&dyn CompletionClient; PANEL_SIZE],
) -> Result<FilterOutcome, FilterError> {
    if messages.is_empty() {
        return Err(FilterError::NoMessages);
    }
    let prompt = build_filter_prompt(messages);
    let replies: Vec<Result<String, ClientError>> = thread::scope(|s| {
        let handles: Vec<_> = judges
            .iter()
            .map(|j| {
                let prompt = &prompt;
                s.spawn(move || j.complete(prompt))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("judge thread panicked"))
            .collect()
    });

    let mut verdicts = [false; PANEL_SIZE];
    for (judge, reply) in replies.into_iter().enumerate() {
        let reply = reply.map_err(|source| FilterError::Client { judge, source })?;
        verdicts[judge] =
            parse_label(&reply).map_err(|source| FilterError::Verdict { judge, source })?;
    }
    let yes = verdicts.iter().filter(|v| **v).count();
    Ok(FilterOutcome {
        retained: yes * 2 > PANEL_SIZE,
        verdicts,
    })
}
