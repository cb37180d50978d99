pub mod analyze;
pub mod filter;
pub mod score;
pub mod serve;
pub mod tag;
