//! Corpus ingest: streaming newline-delimited post records, normalizing
//! text, tokenizing and aggregating unique token types.

mod contexts;
mod count;
mod preprocess;
mod reader;
mod tokenize;

pub use contexts::{harvest_contexts, Context, ContextConfig};
pub use count::{count_types, count_types_par, TypeCounter, TypeStats};
pub use preprocess::{preprocess, PLACEHOLDER_SUB, PLACEHOLDER_TAG, PLACEHOLDER_URL, PLACEHOLDER_USER};
pub use reader::{read_posts, CorpusFormat, IngestStats, Post, PostReader};
pub use tokenize::{token_spans, tokenize, RuleTokenizer, Stopwords, Tokenizer};
