//! Pattern-based cleaning.
//!
//! Two rule families: language-independent structure checks (alphabet,
//! length, keyboard spam, repetition, entropy) and a language-specific rule
//! pack loaded from a data file (prefixes, clusters, expressive spellings,
//! placeholder words). Rules run in a fixed order and the first failure is
//! reported.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use regex::RegexSet;
use serde::Deserialize;

use crate::error::{Error, Result};

const ENGLISH_PACK: &str = include_str!("../data/rules/en.toml");
const PACK_SCHEMA: &str = "neosift.rulepack";
const PACK_VERSION: u32 = 1;

/// Identifier of the first rule a surface failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RejectReason {
    Alphabetic,
    Length,
    Spam,
    Repetition,
    Entropy,
    Prefix,
    Cluster,
    Expressive,
    Placeholder,
}

impl RejectReason {
    pub const ALL: [RejectReason; 9] = [
        RejectReason::Alphabetic,
        RejectReason::Length,
        RejectReason::Spam,
        RejectReason::Repetition,
        RejectReason::Entropy,
        RejectReason::Prefix,
        RejectReason::Cluster,
        RejectReason::Expressive,
        RejectReason::Placeholder,
    ];

    pub fn id(self) -> &'static str {
        match self {
            RejectReason::Alphabetic => "alphabetic",
            RejectReason::Length => "length",
            RejectReason::Spam => "spam",
            RejectReason::Repetition => "repetition",
            RejectReason::Entropy => "entropy",
            RejectReason::Prefix => "prefix",
            RejectReason::Cluster => "cluster",
            RejectReason::Expressive => "expressive",
            RejectReason::Placeholder => "placeholder",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternDecision {
    Pass,
    Reject(RejectReason),
}

/// Structural thresholds. Language-independent.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralRules {
    pub min_len: usize,
    pub max_len: usize,
    /// Tokens longer than this are checked for too few unique characters.
    pub spam_len: usize,
    pub spam_unique_max: usize,
    /// Bits; applies to tokens of at least `entropy_min_len` characters.
    pub entropy_min: f64,
    pub entropy_min_len: usize,
    /// A run of this many identical characters rejects.
    pub char_run: usize,
    /// This many consecutive copies of one bigram rejects.
    pub bigram_repeat: usize,
}

impl Default for StructuralRules {
    fn default() -> Self {
        StructuralRules {
            min_len: 3,
            max_len: 20,
            spam_len: 6,
            spam_unique_max: 2,
            entropy_min: 2.0,
            entropy_min_len: 6,
            char_run: 3,
            bigram_repeat: 3,
        }
    }
}

impl StructuralRules {
    pub fn validate(&self) -> Result<()> {
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(Error::Config(format!(
                "pattern length bounds must satisfy 0 < min_len <= max_len (got {}..={})",
                self.min_len, self.max_len
            )));
        }
        if self.entropy_min.is_nan() || self.entropy_min < 0.0 {
            return Err(Error::Config("entropy_min must be >= 0".into()));
        }
        if self.char_run < 2 || self.bigram_repeat < 2 {
            return Err(Error::Config("repetition limits must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PackFile {
    schema: String,
    version: u32,
    language: String,
    #[serde(default)]
    banned_prefixes: Vec<String>,
    #[serde(default)]
    banned_cluster_patterns: Vec<String>,
    #[serde(default)]
    expressive_patterns: Vec<String>,
    #[serde(default)]
    placeholder_words: Vec<String>,
}

/// Language-specific rule classes, compiled.
#[derive(Debug, Clone)]
pub struct RulePack {
    pub language: String,
    pub banned_prefixes: Vec<String>,
    pub banned_cluster_patterns: Vec<String>,
    pub expressive_patterns: Vec<String>,
    pub placeholder_words: HashSet<String>,
    clusters: RegexSet,
    expressive: RegexSet,
}

impl RulePack {
    pub fn english() -> Self {
        Self::parse(ENGLISH_PACK).expect("bundled English rule pack is valid")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Built-in pack by language code, if one ships with the crate.
    pub fn builtin(language: &str) -> Option<Self> {
        matches!(language, "en" | "eng").then(Self::english)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: PackFile = toml::from_str(text).map_err(|e| Error::RulePack(e.to_string()))?;
        if file.schema != PACK_SCHEMA {
            return Err(Error::RulePack(format!(
                "unexpected schema `{}` (want `{PACK_SCHEMA}`)",
                file.schema
            )));
        }
        if file.version != PACK_VERSION {
            return Err(Error::RulePack(format!(
                "unsupported rule pack version {} (want {PACK_VERSION})",
                file.version
            )));
        }
        let compile =
            |pats: &[String]| RegexSet::new(pats).map_err(|e| Error::RulePack(format!("bad pattern: {e}")));
        Ok(RulePack {
            clusters: compile(&file.banned_cluster_patterns)?,
            expressive: compile(&file.expressive_patterns)?,
            language: file.language,
            banned_prefixes: file.banned_prefixes.iter().map(|p| p.to_lowercase()).collect(),
            banned_cluster_patterns: file.banned_cluster_patterns,
            expressive_patterns: file.expressive_patterns,
            placeholder_words: file.placeholder_words.iter().map(|w| w.to_lowercase()).collect(),
        })
    }
}

/// Full rule set: structural thresholds plus a language pack.
#[derive(Debug, Clone)]
pub struct PatternRuleSet {
    pub structure: StructuralRules,
    pub pack: RulePack,
}

impl PatternRuleSet {
    pub fn new(structure: StructuralRules, pack: RulePack) -> Result<Self> {
        structure.validate()?;
        Ok(PatternRuleSet { structure, pack })
    }

    pub fn english() -> Self {
        PatternRuleSet {
            structure: StructuralRules::default(),
            pack: RulePack::english(),
        }
    }

    pub fn check(&self, surface: &str) -> PatternDecision {
        match self.first_failure(surface) {
            Some(r) => PatternDecision::Reject(r),
            None => PatternDecision::Pass,
        }
    }

    fn first_failure(&self, s: &str) -> Option<RejectReason> {
        let st = &self.structure;
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_lowercase()) {
            return Some(RejectReason::Alphabetic);
        }
        let len = s.len();
        if len < st.min_len || len > st.max_len {
            return Some(RejectReason::Length);
        }
        if len > st.spam_len && unique_chars(s) <= st.spam_unique_max {
            return Some(RejectReason::Spam);
        }
        if longest_run(s) >= st.char_run || max_bigram_repeat(s) >= st.bigram_repeat {
            return Some(RejectReason::Repetition);
        }
        if len >= st.entropy_min_len && shannon_bits(s) < st.entropy_min {
            return Some(RejectReason::Entropy);
        }
        let pack = &self.pack;
        if pack.banned_prefixes.iter().any(|p| s.starts_with(p.as_str())) {
            return Some(RejectReason::Prefix);
        }
        if pack.clusters.is_match(s) {
            return Some(RejectReason::Cluster);
        }
        if pack.expressive.is_match(s) {
            return Some(RejectReason::Expressive);
        }
        if pack.placeholder_words.contains(s) {
            return Some(RejectReason::Placeholder);
        }
        None
    }
}

/// Shannon entropy in bits of the character distribution of `surface`.
pub fn char_entropy(surface: &str) -> Result<f64> {
    if surface.is_empty() {
        return Err(Error::EmptySurface);
    }
    Ok(shannon_bits(surface))
}

fn shannon_bits(s: &str) -> f64 {
    let mut freq: HashMap<char, usize> = HashMap::new();
    let mut n = 0usize;
    for c in s.chars() {
        *freq.entry(c).or_default() += 1;
        n += 1;
    }
    let n = n as f64;
    let h: f64 = freq
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    // -0.0 for single-symbol strings
    h.max(0.0)
}

fn unique_chars(s: &str) -> usize {
    let mut seen = [false; 128];
    s.bytes()
        .filter(|&b| !std::mem::replace(&mut seen[b as usize & 127], true))
        .count()
}

fn longest_run(s: &str) -> usize {
    let b = s.as_bytes();
    let mut best = 0;
    let mut run = 0;
    for i in 0..b.len() {
        run = if i > 0 && b[i] == b[i - 1] { run + 1 } else { 1 };
        best = best.max(run);
    }
    best
}

/// Largest number of back-to-back copies of any bigram.
fn max_bigram_repeat(s: &str) -> usize {
    let b = s.as_bytes();
    let mut best = if b.len() >= 2 { 1 } else { 0 };
    for start in 0..b.len().saturating_sub(1) {
        let mut copies = 1;
        let mut i = start + 2;
        while i + 1 < b.len() && b[i] == b[start] && b[i + 1] == b[start + 1] {
            copies += 1;
            i += 2;
        }
        best = best.max(copies);
    }
    best
}
