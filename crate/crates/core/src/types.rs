//! Types shared across the cascade: stages, per-token flags and the
//! per-token trace that records every decision made about a surface form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Cascade stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Tokenize,
    Vocab,
    Pattern,
    Concat,
    Typo,
    Freq,
    Lang,
    Vote,
    Verify,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Tokenize,
        Stage::Vocab,
        Stage::Pattern,
        Stage::Concat,
        Stage::Typo,
        Stage::Freq,
        Stage::Lang,
        Stage::Vote,
        Stage::Verify,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Stage::Tokenize => "tokenize",
            Stage::Vocab => "vocab",
            Stage::Pattern => "pattern",
            Stage::Concat => "concat",
            Stage::Typo => "typo",
            Stage::Freq => "freq",
            Stage::Lang => "lang",
            Stage::Vote => "vote",
            Stage::Verify => "verify",
        }
    }

    /// Row label used in cascade reports.
    pub fn title(self) -> &'static str {
        match self {
            Stage::Tokenize => "Tokenization",
            Stage::Vocab => "Vocabulary lookup",
            Stage::Pattern => "Pattern cleaning",
            Stage::Concat => "Concatenation detection",
            Stage::Typo => "Typo detection",
            Stage::Freq => "Freq. threshold + reintegration",
            Stage::Lang => "Foreign language detection",
            Stage::Vote => "Majority vote (NEOLOGISM)",
            Stage::Verify => "Verification",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.id() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

/// Spell-gate flags. A flagged token leaves the main stream and waits in a
/// pool until the frequency gate decides whether to reintegrate it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Flags {
    pub typo: bool,
    pub concat: bool,
}

impl Flags {
    pub fn any(self) -> bool {
        self.typo || self.concat
    }
}

impl fmt::Display for Flags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.typo, self.concat) {
            (false, false) => f.write_str("-"),
            (true, false) => f.write_str("TYPO"),
            (false, true) => f.write_str("CONCAT"),
            (true, true) => f.write_str("TYPO,CONCAT"),
        }
    }
}

impl FromStr for Flags {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut flags = Flags::default();
        if s == "-" || s.is_empty() {
            return Ok(flags);
        }
        for part in s.split(',') {
            match part {
                "TYPO" => flags.typo = true,
                "CONCAT" => flags.concat = true,
                other => return Err(format!("unknown flag `{other}`")),
            }
        }
        Ok(flags)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Pass,
    Reject(String),
    Flag,
    Reintegrate,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Pass => f.write_str("pass"),
            Decision::Reject(reason) => write!(f, "reject={reason}"),
            Decision::Flag => f.write_str("flag"),
            Decision::Reintegrate => f.write_str("reintegrate"),
        }
    }
}

impl FromStr for Decision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pass" => Ok(Decision::Pass),
            "flag" => Ok(Decision::Flag),
            "reintegrate" => Ok(Decision::Reintegrate),
            _ => s
                .strip_prefix("reject=")
                .map(|r| Decision::Reject(r.to_string()))
                .ok_or_else(|| format!("unknown decision `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceEntry {
    pub stage: Stage,
    pub decision: Decision,
}

/// A unique lowercased surface form with its corpus statistics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenType {
    pub surface: String,
    pub count: u64,
    /// Number of distinct communities the surface was observed in.
    pub subreddits: u32,
    pub flags: Flags,
    pub trace: Vec<TraceEntry>,
}

impl TokenType {
    pub fn new(surface: impl Into<String>, count: u64, subreddits: u32) -> Self {
        TokenType {
            surface: surface.into(),
            count,
            subreddits,
            flags: Flags::default(),
            trace: Vec::new(),
        }
    }

    /// Appends a trace entry. Entries must arrive in cascade order.
    pub fn record(&mut self, stage: Stage, decision: Decision) {
        debug_assert!(
            self.trace.last().is_none_or(|last| last.stage <= stage),
            "trace out of cascade order for `{}`",
            self.surface
        );
        self.trace.push(TraceEntry { stage, decision });
    }

    pub fn trace_string(&self) -> String {
        if self.trace.is_empty() {
            return "-".to_string();
        }
        self.trace
            .iter()
            .map(|e| format!("{}:{}", e.stage, e.decision))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn parse_trace(s: &str) -> Result<Vec<TraceEntry>, String> {
        if s == "-" || s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(';')
            .map(|item| {
                let (stage, decision) = item
                    .split_once(':')
                    .ok_or_else(|| format!("malformed trace entry `{item}`"))?;
                Ok(TraceEntry {
                    stage: stage.parse()?,
                    decision: decision.parse()?,
                })
            })
            .collect()
    }

    /// `surface \t count \t n_subreddits \t flags \t trace`
    pub fn to_tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.surface,
            self.count,
            self.subreddits,
            self.flags,
            self.trace_string()
        )
    }

    pub fn from_tsv_row(row: &str) -> Result<Self, String> {
        let cols: Vec<&str> = row.split('\t').collect();
        if cols.len() < 3 {
            return Err(format!("expected at least 3 columns, found {}", cols.len()));
        }
        let count = cols[1]
            .parse()
            .map_err(|e| format!("bad count `{}`: {e}", cols[1]))?;
        let subreddits = cols[2]
            .parse()
            .map_err(|e| format!("bad subreddit count `{}`: {e}", cols[2]))?;
        let flags = cols.get(3).copied().unwrap_or("-").parse()?;
        let trace = Self::parse_trace(cols.get(4).copied().unwrap_or("-"))?;
        Ok(TokenType {
            surface: cols[0].to_string(),
            count,
            subreddits,
            flags,
            trace,
        })
    }
}
