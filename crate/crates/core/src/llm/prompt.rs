use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::Context;

const MULTI: &str = include_str!("../../prompts/multi.txt");
const SINGLE: &str = include_str!("../../prompts/single.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Template {
    /// Batched primary prompt.
    Multi,
    /// One-token retry prompt.
    Single,
}

impl Template {
    pub fn id(self) -> &'static str {
        match self {
            Template::Multi => "multi",
            Template::Single => "single",
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            Template::Multi => MULTI,
            Template::Single => SINGLE,
        }
    }
}

/// A candidate as shown to a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptToken {
    pub surface: String,
    pub contexts: Vec<Context>,
}

impl PromptToken {
    pub fn bare(surface: impl Into<String>) -> Self {
        PromptToken {
            surface: surface.into(),
            contexts: Vec::new(),
        }
    }
}

/// Escapes context text for a double-quoted slot: backslash and quote are
/// backslash-escaped; newlines, carriage returns and tabs become spaces.
pub fn escape_context(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' | '\r' | '\t' => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

fn token_block(out: &mut String, token: &PromptToken) {
    let _ = writeln!(out, "TOKEN: {}", token.surface);
    for (i, c) in token.contexts.iter().enumerate() {
        let _ = writeln!(
            out,
            "  context_{} (r/{}): \"{}\"",
            i + 1,
            c.subreddit,
            escape_context(&c.snippet)
        );
    }
}

/// Fills a template. SINGLE takes exactly one token.
pub fn render_prompt(tokens: &[PromptToken], template: Template) -> String {
    assert!(!tokens.is_empty(), "cannot render an empty batch");
    match template {
        Template::Multi => {
            let mut blocks = String::new();
            for t in tokens {
                token_block(&mut blocks, t);
            }
            MULTI.replace("{{TOKENS}}", &blocks)
        }
        Template::Single => {
            assert_eq!(tokens.len(), 1, "the single-token template takes one token");
            let mut block = String::new();
            token_block(&mut block, &tokens[0]);
            // surface first, so context text is never scanned for slots
            SINGLE
                .replace("{{TOKEN}}", &tokens[0].surface)
                .replace("{{TOKEN_BLOCK}}", &block)
        }
    }
}
