//! Token-level language identification and the foreign-language gate.

mod ngram;
#[cfg(feature = "whatlang")]
mod whatlang_adapter;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::{Decision, Stage, TokenType};

pub use ngram::{LangProfile, NgramDetector, SEED_LANGUAGES};
#[cfg(feature = "whatlang")]
pub use whatlang_adapter::WhatlangDetector;

/// ISO 639-3 codes of the default language inventory.
pub const DEFAULT_INVENTORY: [&str; 47] = [
    "eng", "spa", "fra", "deu", "por", "ita", "nld", "tgl", "swe", "ind", "tur", "pol", "dan", "nob", "fin",
    "ces", "ron", "hun", "cat", "hrv", "slk", "slv", "srp", "bos", "lit", "lav", "est", "afr", "swa", "zsm",
    "vie", "eus", "glg", "isl", "gle", "cym", "sqi", "rus", "ukr", "bul", "ell", "jav", "som", "yor", "zul",
    "epo", "lat",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangVerdict {
    pub language: String,
    /// In `[0, 1]`.
    pub confidence: f64,
}

pub trait LanguageDetector: Send + Sync {
    /// Code of the language candidates are expected to be written in.
    fn target(&self) -> &str;

    fn detect(&self, surface: &str) -> LangVerdict;
}

/// Whether a verdict removes its token.
pub fn is_foreign(verdict: &LangVerdict, target: &str, threshold: f64) -> bool {
    verdict.language != target && verdict.confidence >= threshold
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LangStats {
    pub removed: u64,
    pub retained_low_confidence: u64,
    pub removed_by_language: BTreeMap<String, u64>,
}

/// Removes tokens confidently detected as a language other than the target.
pub fn gate(
    tokens: impl IntoIterator<Item = TokenType>,
    detector: &dyn LanguageDetector,
    threshold: f64,
) -> (Vec<TokenType>, LangStats) {
    let (kept, _, stats) = split(tokens, detector, threshold);
    (kept, stats)
}

/// Like [`gate`], also returning removed tokens traced with
/// `reject=foreign:<code>`.
pub fn split(
    tokens: impl IntoIterator<Item = TokenType>,
    detector: &dyn LanguageDetector,
    threshold: f64,
) -> (Vec<TokenType>, Vec<TokenType>, LangStats) {
    use rayon::prelude::*;

    let tokens: Vec<TokenType> = tokens.into_iter().collect();
    let verdicts: Vec<LangVerdict> = tokens.par_iter().map(|t| detector.detect(&t.surface)).collect();
    let mut stats = LangStats::default();
    let mut kept = Vec::with_capacity(tokens.len());
    let mut removed = Vec::new();
    for (mut t, v) in tokens.into_iter().zip(verdicts) {
        if is_foreign(&v, detector.target(), threshold) {
            stats.removed += 1;
            t.record(Stage::Lang, Decision::Reject(format!("foreign:{}", v.language)));
            *stats.removed_by_language.entry(v.language).or_default() += 1;
            removed.push(t);
            continue;
        }
        if v.language != detector.target() {
            stats.retained_low_confidence += 1;
        }
        t.record(Stage::Lang, Decision::Pass);
        kept.push(t);
    }
    (kept, removed, stats)
}
