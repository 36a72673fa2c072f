use std::borrow::Borrow;
use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::preprocess::preprocess;
use super::reader::Post;
use super::tokenize::Tokenizer;

/// A usage example shown to the classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Context {
    pub subreddit: String,
    pub snippet: String,
}

#[derive(Debug, Clone, Copy)]
pub struct ContextConfig {
    /// Contexts per candidate.
    pub k: usize,
    /// Characters kept on each side of the token.
    pub radius: usize,
}

impl Default for ContextConfig {
    fn default() -> Self {
        ContextConfig { k: 3, radius: 120 }
    }
}

#[derive(Default)]
struct Slot {
    chosen: Vec<Context>,
    seen: HashSet<String>,
    spare: Vec<Context>,
}

fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

fn floor_boundary(s: &str, mut i: usize) -> usize {
    while !s.is_char_boundary(i) {
        i -= 1;
    }
    i
}

fn ceil_boundary(s: &str, mut i: usize) -> usize {
    while i < s.len() && !s.is_char_boundary(i) {
        i += 1;
    }
    i
}

/// Window of `radius` bytes on each side of `start..end`, shrunk to whole
/// words. Never longer than `2 * radius + (end - start)`.
fn snippet(text: &str, start: usize, end: usize, radius: usize) -> String {
    let mut lo = ceil_boundary(text, start.saturating_sub(radius));
    let mut hi = floor_boundary(text, (end + radius).min(text.len()));
    if lo > 0 && !text[..lo].ends_with(' ') {
        lo = text[lo..start].find(' ').map_or(start, |p| lo + p + 1);
    }
    if hi < text.len() && !text[hi..].starts_with(' ') {
        hi = text[end..hi].rfind(' ').map_or(end, |p| end + p);
    }
    text[lo..hi].trim().to_string()
}

/// Second pass over the corpus collecting up to `k` usage contexts per
/// candidate, preferring one per distinct community. Candidates with no
/// occurrence map to an empty list.
pub fn harvest_contexts<P: Borrow<Post>>(
    posts: impl IntoIterator<Item = P>,
    candidates: &HashSet<String>,
    tokenizer: &dyn Tokenizer,
    config: ContextConfig,
) -> BTreeMap<String, Vec<Context>> {
    let k = config.k.max(1);
    let mut slots: HashMap<&str, Slot> = candidates.iter().map(|c| (c.as_str(), Slot::default())).collect();
    let mut satisfied = 0usize;

    for post in posts {
        if satisfied == slots.len() {
            break;
        }
        let post = post.borrow();
        let text = collapse_whitespace(&preprocess(&post.body));
        let mut in_post: HashSet<&str> = HashSet::new();
        for span in tokenizer.spans(&text) {
            let lowered = text[span.clone()].to_lowercase();
            let Some(key) = slots.get_key_value(lowered.as_str()).map(|(k, _)| *k) else {
                continue;
            };
            let slot = slots.get_mut(key).expect("key present");
            if !in_post.insert(key) || slot.chosen.len() >= k {
                continue;
            }
            let ctx = Context {
                subreddit: post.subreddit.clone(),
                snippet: snippet(&text, span.start, span.end, config.radius),
            };
            if slot.seen.insert(post.subreddit.clone()) {
                slot.chosen.push(ctx);
                if slot.chosen.len() == k {
                    satisfied += 1;
                }
            } else if slot.spare.len() < k {
                slot.spare.push(ctx);
            }
        }
    }

    slots
        .into_iter()
        .map(|(surface, mut slot)| {
            let missing = k - slot.chosen.len();
            slot.chosen.extend(slot.spare.into_iter().take(missing));
            (surface.to_string(), slot.chosen)
        })
        .collect()
}
