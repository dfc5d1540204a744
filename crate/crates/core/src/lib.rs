//! Machine unlearning for small language models: a synthetic fictitious-author
//! QA corpus, a tiny transformer with exact sequence log-probabilities,
//! preference-style unlearning losses, and response-quality metrics.

pub mod corpus;
pub mod error;
pub mod judge;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod search;
pub mod tokenizer;
pub mod train;

pub use error::{Error, Result};
