//! Cascade accounting: counts per stage and the overall compression ratio.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::types::Stage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CascadeRow {
    pub stage: Stage,
    pub remaining: u64,
    pub removed: u64,
    pub reintegrated: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CascadeReport {
    pub rows: Vec<CascadeRow>,
    /// `initial:1`, rounded; `∞` when nothing survived.
    pub compression_ratio: String,
}

/// `1234567` → `1,234,567`.
pub fn group_thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Initial over final, rounded half up, as `N:1`.
pub fn compression_ratio(initial: u64, last: u64) -> String {
    if last == 0 {
        log::warn!("no candidates survived; compression ratio is undefined");
        return "∞".to_string();
    }
    let (i, f) = (initial as u128, last as u128);
    let r = (2 * i + f) / (2 * f);
    format!("{}:1", group_thousands(r as u64))
}

impl CascadeReport {
    pub fn new(rows: Vec<CascadeRow>) -> Self {
        let ratio = match (rows.first(), rows.last()) {
            (Some(a), Some(b)) => compression_ratio(a.remaining, b.remaining),
            _ => compression_ratio(0, 0),
        };
        let report = CascadeReport {
            rows,
            compression_ratio: ratio,
        };
        debug_assert!(report.conservation().is_ok(), "{:?}", report.conservation());
        report
    }

    /// Builds a report from remaining counts alone. Every drop is read as a
    /// removal; use [`CascadeReport::with_reintegrated`] to split out
    /// reintegrations.
    pub fn from_remaining(counts: &[(Stage, u64)]) -> Self {
        let mut rows = Vec::with_capacity(counts.len());
        let mut prev: Option<u64> = None;
        for &(stage, remaining) in counts {
            let (removed, reintegrated) = match prev {
                None => (0, 0),
                Some(p) if remaining <= p => (p - remaining, 0),
                Some(p) => (0, remaining - p),
            };
            rows.push(CascadeRow {
                stage,
                remaining,
                removed,
                reintegrated,
            });
            prev = Some(remaining);
        }
        CascadeReport::new(rows)
    }

    /// Records `n` reintegrations at `stage`, which raises its removal count
    /// by the same amount.
    pub fn with_reintegrated(mut self, stage: Stage, n: u64) -> Self {
        if let Some(row) = self.rows.iter_mut().find(|r| r.stage == stage) {
            let net = row.reintegrated as i128 - row.removed as i128;
            row.reintegrated = n;
            row.removed = (n as i128 - net) as u64;
        }
        debug_assert!(self.conservation().is_ok(), "{:?}", self.conservation());
        self
    }

    /// Reads `stage<TAB>remaining[<TAB>reintegrated]` rows. Stages are
    /// named by id or report title; numbers may carry thousands separators.
    pub fn parse_counts(text: &str) -> Result<Self, String> {
        let mut remaining = Vec::new();
        let mut reintegrated = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if remaining.is_empty() && cols[0].eq_ignore_ascii_case("stage") {
                continue;
            }
            let stage = Stage::ALL
                .into_iter()
                .find(|s| s.id() == cols[0].to_lowercase() || s.title().eq_ignore_ascii_case(cols[0]))
                .ok_or_else(|| format!("line {}: unknown stage `{}`", i + 1, cols[0]))?;
            let num = |s: &str| {
                s.replace(',', "")
                    .parse::<u64>()
                    .map_err(|_| format!("line {}: bad count `{s}`", i + 1))
            };
            let n = num(cols
                .get(1)
                .ok_or_else(|| format!("line {}: missing count", i + 1))?)?;
            remaining.push((stage, n));
            if let Some(r) = cols.get(2).filter(|c| !c.is_empty()) {
                reintegrated.push((stage, num(r)?));
            }
        }
        let mut report = CascadeReport::from_remaining(&remaining);
        for (stage, n) in reintegrated {
            report = report.with_reintegrated(stage, n);
        }
        Ok(report)
    }

    pub fn initial(&self) -> u64 {
        self.rows.first().map_or(0, |r| r.remaining)
    }

    pub fn final_count(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.remaining)
    }

    /// Checks `remaining = previous − removed + reintegrated` on every row.
    pub fn conservation(&self) -> Result<(), String> {
        for w in self.rows.windows(2) {
            let (p, r) = (w[0], w[1]);
            if p.remaining as i128 - r.removed as i128 + r.reintegrated as i128 != r.remaining as i128 {
                return Err(format!(
                    "{}: {} - {} + {} != {}",
                    r.stage, p.remaining, r.removed, r.reintegrated, r.remaining
                ));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Filtering cascade (concatenation detection runs before typo detection)\n"
        );
        let _ = writeln!(
            out,
            "{:<34} {:>15} {:>15} {:>13}",
            "Stage", "Remaining", "Removed", "Reintegrated"
        );
        for (i, r) in self.rows.iter().enumerate() {
            let dash = |n: u64, show: bool| if show { group_thousands(n) } else { "-".into() };
            let _ = writeln!(
                out,
                "{:<34} {:>15} {:>15} {:>13}",
                r.stage.title(),
                group_thousands(r.remaining),
                dash(r.removed, i > 0),
                dash(r.reintegrated, r.reintegrated > 0),
            );
        }
        let _ = writeln!(out, "\nCompression ratio: {}", self.compression_ratio);
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
