//! Corpus diagnostics and evaluation statistics.

mod corpus;
mod empathy;
mod lexical;
mod report;
mod stats;

pub use corpus::{
    conversation_stickiness, corpus_stats, new_tactic_counts, new_tactics_per_turn, prevalence,
    stickiness, supporter_tactic_sets, tactics_per_turn, untagged_turns, AnalyticsError,
    CorpusStats, Estimate, PairStickiness, StickinessReport, TacticStickiness,
};
pub use empathy::{
    aggregate_empathy, build_dimension_prompt, build_judge_prompt, parse_judge_score,
    EmpathyDimension, EmpathyScores, JUDGE_RUBRIC, JUDGE_TEMPLATE,
};
pub use lexical::{bigram_overlap, bleu2, tokenize, BLEU_EPSILON};
pub use report::{
    analyze, parse_rating, round_sig6, AnalysisReport, LexicalSection, PrevalenceRow, SpearmanRow,
    StickinessRow, StickinessSection, SATISFACTION_KEYS,
};
pub use stats::{
    average_ranks, spearman, spearman_p_value, spearman_test, weighted_kappa, SpearmanTest,
    Weighting, KAPPA_CATEGORIES,
};
