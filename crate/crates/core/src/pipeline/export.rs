//! Candidate export: one record per surviving candidate.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Context;
use crate::error::{Error, Result};
use crate::llm::{Classification, Label};
use crate::types::TokenType;

use super::checkpoint::write_atomic;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub surface: String,
    pub count: u64,
    pub n_subreddits: u32,
    pub contexts: Vec<Context>,
    pub votes: BTreeMap<String, Label>,
    pub majority: Option<Label>,
    pub verifier: Option<Label>,
    #[serde(rename = "final")]
    pub final_label: Option<Label>,
    #[serde(default)]
    pub unverified: bool,
}

impl CandidateRecord {
    pub fn new(token: &TokenType, contexts: Option<&Vec<Context>>, class: Option<&Classification>) -> Self {
        CandidateRecord {
            surface: token.surface.clone(),
            count: token.count,
            n_subreddits: token.subreddits,
            contexts: contexts.cloned().unwrap_or_default(),
            votes: class.map(|c| c.votes.clone()).unwrap_or_default(),
            majority: class.map(|c| c.majority),
            verifier: class.and_then(|c| c.verifier),
            final_label: class.map(|c| c.final_label),
            unverified: class.is_some_and(|c| c.unverified),
        }
    }
}

pub fn write_ndjson<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item)?);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_ndjson<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(path, i + 1, e.to_string())))
        .collect()
}

fn cell(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

fn label_cell(l: Option<Label>) -> &'static str {
    l.map_or("", Label::as_str)
}

/// Flat table for spreadsheet annotation.
pub fn to_tsv(records: &[CandidateRecord]) -> String {
    let k = records.iter().map(|r| r.contexts.len()).max().unwrap_or(0);
    let mut out = String::from("surface\tcount\tn_subreddits\tmajority\tverifier\tfinal\tunverified\tvotes");
    for i in 1..=k {
        let _ = write!(out, "\tcontext_{i}");
    }
    out.push('\n');
    for r in records {
        let votes: Vec<String> = r.votes.iter().map(|(e, l)| format!("{e}={l}")).collect();
        let _ = write!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.surface,
            r.count,
            r.n_subreddits,
            label_cell(r.majority),
            label_cell(r.verifier),
            label_cell(r.final_label),
            r.unverified,
            votes.join(",")
        );
        for i in 0..k {
            out.push('\t');
            if let Some(c) = r.contexts.get(i) {
                let _ = write!(out, "r/{}: {}", c.subreddit, cell(&c.snippet));
            }
        }
        out.push('\n');
    }
    out
}

/// Reads candidates from an NDJSON export, or from any TSV whose first
/// column is the surface (a `surface` header row is skipped).
pub fn read_candidates(path: &Path) -> Result<Vec<CandidateRecord>> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if matches!(ext, "ndjson" | "jsonl" | "json") {
        return read_ndjson(path);
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let surface = line.split('\t').next().unwrap_or("").trim();
        if surface.is_empty() || line.starts_with('#') || (i == 0 && surface == "surface") {
            continue;
        }
        out.push(CandidateRecord {
            surface: surface.to_string(),
            count: 0,
            n_subreddits: 0,
            contexts: Vec::new(),
            votes: BTreeMap::new(),
            majority: None,
            verifier: None,
            final_label: None,
            unverified: false,
        });
    }
    Ok(out)
}
