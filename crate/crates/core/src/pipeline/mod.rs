//! End-to-end orchestration with per-step checkpoints, cascade reports,
//! candidate exports and evaluation against annotations.

pub mod checkpoint;
pub mod config;
pub mod eval;
pub mod export;
pub mod report;
pub mod run;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::types::Stage;

pub use checkpoint::{Layout, Manifest, StepRecord};
pub use config::{DetectorKind, FloorTarget, PipelineConfig, ENV_PREFIX, KEYS, PATH_KEYS};
pub use eval::{
    eval_gold, eval_recall, read_gold, read_reference, GoldEval, GoldRecord, RecallEval, RecallRecord,
    RecallStatus, StageLedger,
};
pub use export::{read_candidates, CandidateRecord};
pub use report::{compression_ratio, group_thousands, CascadeReport, CascadeRow};
pub use run::{load_report, run, RunOptions, RunSummary, StepOutcome};

/// A checkpointed unit of work. Every cascade stage is a step; context
/// harvesting is an extra step between language detection and voting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    Tokenize,
    Vocab,
    Pattern,
    Concat,
    Typo,
    Freq,
    Lang,
    Contexts,
    Vote,
    Verify,
}

impl Step {
    pub const ALL: [Step; 10] = [
        Step::Tokenize,
        Step::Vocab,
        Step::Pattern,
        Step::Concat,
        Step::Typo,
        Step::Freq,
        Step::Lang,
        Step::Contexts,
        Step::Vote,
        Step::Verify,
    ];

    pub fn id(self) -> &'static str {
        match self.stage() {
            Some(s) => s.id(),
            None => "contexts",
        }
    }

    /// The cascade stage this step reports as, if any.
    pub fn stage(self) -> Option<Stage> {
        Some(match self {
            Step::Tokenize => Stage::Tokenize,
            Step::Vocab => Stage::Vocab,
            Step::Pattern => Stage::Pattern,
            Step::Concat => Stage::Concat,
            Step::Typo => Stage::Typo,
            Step::Freq => Stage::Freq,
            Step::Lang => Stage::Lang,
            Step::Contexts => return None,
            Step::Vote => Stage::Vote,
            Step::Verify => Stage::Verify,
        })
    }

    /// The step whose token snapshot feeds this one.
    pub fn token_source(self) -> Option<Step> {
        match self {
            Step::Tokenize => None,
            Step::Contexts | Step::Vote => Some(Step::Lang),
            s => Some(Step::ALL[s as usize - 1]),
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Step {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Step::ALL.into_iter().find(|st| st.id() == s).ok_or_else(|| {
            let ids: Vec<&str> = Step::ALL.iter().map(|s| s.id()).collect();
            format!("unknown step `{s}` (expected one of {})", ids.join(", "))
        })
    }
}
