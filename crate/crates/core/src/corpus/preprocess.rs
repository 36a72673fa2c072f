use std::sync::LazyLock;

use regex::Regex;

// Placeholders carry bracket characters outside [a-z], so the alphabetic rule
// of the pattern filter discards them without special-casing.
pub const PLACEHOLDER_URL: &str = "⟦URL⟧";
pub const PLACEHOLDER_SUB: &str = "⟦SUB⟧";
pub const PLACEHOLDER_USER: &str = "⟦USER⟧";
pub const PLACEHOLDER_TAG: &str = "⟦TAG⟧";

static URL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\b(?:https?://|www\.)[^\s)\]>]+").unwrap());
static SUBREDDIT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(^|[^A-Za-z0-9_/])/?r/[A-Za-z0-9_]+").unwrap());
static USER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(^|[^A-Za-z0-9_/])/?u/[A-Za-z0-9_-]+").unwrap());
static HASHTAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(^|[^A-Za-z0-9_&])#[A-Za-z0-9_]+").unwrap());

/// Strips non-ASCII characters (emoji included) and replaces URLs,
/// community references, user mentions and hashtags with placeholders.
pub fn preprocess(body: &str) -> String {
    let ascii: String = body.chars().filter(char::is_ascii).collect();
    let s = URL.replace_all(&ascii, PLACEHOLDER_URL);
    let s = SUBREDDIT.replace_all(&s, format!("${{1}}{PLACEHOLDER_SUB}").as_str());
    let s = USER.replace_all(&s, format!("${{1}}{PLACEHOLDER_USER}").as_str());
    let s = HASHTAG.replace_all(&s, format!("${{1}}{PLACEHOLDER_TAG}").as_str());
    s.into_owned()
}
