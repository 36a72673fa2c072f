//! Prompting, label parsing, voting and verification against chat endpoints.

mod checkpoint;
mod classify;
mod endpoint;
mod label;
mod parse;
mod prompt;
mod provider;
mod ratelimit;
mod vote;

pub use checkpoint::{response_hash, ResultRecord, ResultsLog, TemplateUsed};
pub use classify::{
    aggregate, classify_all, classify_endpoint, verify, Classification, ClassifyOptions, Endpoint,
    EndpointRun, EndpointStats, VerifyStats, Votes,
};
pub use endpoint::{EndpointConfig, MockSettings, ProviderKind, Role};
pub use label::Label;
pub use parse::parse_response;
pub use prompt::{escape_context, render_prompt, PromptToken, Template};
pub use provider::{
    build_provider, read_label_table, request_body, response_text, CallError, HttpProvider, MockProvider,
    Provider,
};
pub use ratelimit::{backoff, TokenBucket};
pub use vote::{majority_vote, tally};
