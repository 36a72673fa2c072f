//! Minimum-occurrence threshold with reintegration of spell-flagged tokens.

use serde::{Deserialize, Serialize};

use crate::types::{Decision, Stage, TokenType};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreqStats {
    /// Unflagged tokens dropped for falling under the threshold.
    pub dropped_low_frequency: u64,
    /// Flagged tokens left out because they fall under the threshold.
    pub flagged_below_threshold: u64,
    pub reintegrated_typo: u64,
    pub reintegrated_concat: u64,
    /// Unflagged tokens dropped for appearing in too few communities.
    pub dropped_dispersion: u64,
    /// Flagged tokens left out for appearing in too few communities.
    pub flagged_dropped_dispersion: u64,
}

impl FreqStats {
    pub fn reintegrated(&self) -> u64 {
        self.reintegrated_typo + self.reintegrated_concat
    }

    /// Unflagged tokens the gate removed from the main stream.
    pub fn removed(&self) -> u64 {
        self.dropped_low_frequency + self.dropped_dispersion
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreqGate {
    pub threshold: u64,
    /// Optional minimum number of distinct communities. Off by default.
    pub min_subreddits: Option<u32>,
}

impl FreqGate {
    pub fn new(threshold: u64) -> Self {
        FreqGate {
            threshold,
            min_subreddits: None,
        }
    }

    fn keeps(&self, t: &TokenType) -> (bool, bool) {
        let frequent = t.count >= self.threshold;
        let dispersed = self.min_subreddits.is_none_or(|m| t.subreddits >= m);
        (frequent, dispersed)
    }

    /// Keeps every token whose count meets the threshold, flagged or not.
    /// Flagged survivors are recorded as reintegrated; flags stay set.
    pub fn gate(&self, tokens: impl IntoIterator<Item = TokenType>) -> (Vec<TokenType>, FreqStats) {
        let (kept, _, stats) = self.split(tokens);
        (kept, stats)
    }

    /// Like [`FreqGate::gate`], also returning the dropped tokens with a
    /// reject entry in their trace.
    pub fn split(
        &self,
        tokens: impl IntoIterator<Item = TokenType>,
    ) -> (Vec<TokenType>, Vec<TokenType>, FreqStats) {
        let mut stats = FreqStats::default();
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        for mut t in tokens {
            let flagged = t.flags.any();
            match self.keeps(&t) {
                (true, true) => {
                    if flagged {
                        if t.flags.concat {
                            stats.reintegrated_concat += 1;
                        } else {
                            stats.reintegrated_typo += 1;
                        }
                        t.record(Stage::Freq, Decision::Reintegrate);
                    } else {
                        t.record(Stage::Freq, Decision::Pass);
                    }
                    kept.push(t);
                }
                (true, false) => {
                    if flagged {
                        stats.flagged_dropped_dispersion += 1;
                    } else {
                        stats.dropped_dispersion += 1;
                    }
                    t.record(Stage::Freq, Decision::Reject("dispersion".into()));
                    dropped.push(t);
                }
                (false, _) => {
                    if flagged {
                        stats.flagged_below_threshold += 1;
                    } else {
                        stats.dropped_low_frequency += 1;
                    }
                    t.record(Stage::Freq, Decision::Reject("low_frequency".into()));
                    dropped.push(t);
                }
            }
        }
        (kept, dropped, stats)
    }
}
