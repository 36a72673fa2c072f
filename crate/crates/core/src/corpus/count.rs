use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;

use super::preprocess::preprocess;
use super::reader::Post;
use super::tokenize::Tokenizer;
use crate::types::TokenType;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeStats {
    pub count: u64,
    pub subreddits: BTreeSet<String>,
}

/// Mergeable per-shard accumulator of token counts.
#[derive(Debug, Clone, Default)]
pub struct TypeCounter {
    types: HashMap<String, TypeStats>,
    tokens: u64,
}

impl TypeCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_post(&mut self, post: &Post, tokenizer: &dyn Tokenizer) {
        let text = preprocess(&post.body);
        for surface in tokenizer.tokenize(&text) {
            self.tokens += 1;
            let entry = self.types.entry(surface).or_default();
            entry.count += 1;
            if !entry.subreddits.contains(&post.subreddit) {
                entry.subreddits.insert(post.subreddit.clone());
            }
        }
    }

    pub fn merge(&mut self, other: TypeCounter) {
        if other.types.len() > self.types.len() {
            let mine = std::mem::replace(self, other);
            return self.merge(mine);
        }
        self.tokens += other.tokens;
        for (surface, stats) in other.types {
            let entry = self.types.entry(surface).or_default();
            entry.count += stats.count;
            entry.subreddits.extend(stats.subreddits);
        }
    }

    /// Total tokens kept after stopword and placeholder removal.
    pub fn total_tokens(&self) -> u64 {
        self.tokens
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn into_map(self) -> BTreeMap<String, TypeStats> {
        self.types.into_iter().collect()
    }

    /// Token types sorted by surface.
    pub fn into_token_types(self) -> Vec<TokenType> {
        let mut out: Vec<TokenType> = self
            .types
            .into_iter()
            .map(|(surface, s)| TokenType::new(surface, s.count, s.subreddits.len() as u32))
            .collect();
        out.sort_unstable_by(|a, b| a.surface.cmp(&b.surface));
        out
    }
}

pub fn count_types<'a>(
    posts: impl IntoIterator<Item = &'a Post>,
    tokenizer: &dyn Tokenizer,
) -> BTreeMap<String, TypeStats> {
    let mut counter = TypeCounter::new();
    for post in posts {
        counter.add_post(post, tokenizer);
    }
    counter.into_map()
}

/// Counts a post stream in parallel, `chunk` posts at a time. Per-chunk
/// counters are merged associatively, so the result does not depend on
/// scheduling.
pub fn count_types_par<I, E>(posts: I, tokenizer: &dyn Tokenizer, chunk: usize) -> Result<TypeCounter, E>
where
    I: Iterator<Item = Result<Post, E>>,
    E: Send,
{
    let chunk = chunk.max(1);
    let mut total = TypeCounter::new();
    let mut batch = Vec::with_capacity(chunk);
    let mut posts = posts.peekable();
    while posts.peek().is_some() {
        batch.clear();
        for post in posts.by_ref().take(chunk) {
            batch.push(post?);
        }
        let part = batch
            .par_chunks(256)
            .map(|slice| {
                let mut c = TypeCounter::new();
                for p in slice {
                    c.add_post(p, tokenizer);
                }
                c
            })
            .reduce(TypeCounter::new, |mut a, b| {
                a.merge(b);
                a
            });
        total.merge(part);
    }
    Ok(total)
}
