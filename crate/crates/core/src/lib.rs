//! Neologism candidate extraction from community corpora.

pub mod corpus;
pub mod error;
pub mod freq;
pub mod lang;
pub mod llm;
pub mod pattern;
pub mod pipeline;
pub mod spell;
pub mod types;
pub mod vocab;

pub use error::{Error, Result};
pub use types::{Decision, Flags, Stage, TokenType, TraceEntry};
