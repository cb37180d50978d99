pub mod analytics;
pub mod dialogue;
pub mod http;
pub mod reward;
pub mod tactic;
pub mod tagging;
