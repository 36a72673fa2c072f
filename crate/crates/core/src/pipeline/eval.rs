//! Evaluation against manual annotation (precision) and against a list of
//! documented neologisms (recall).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::llm::Label;
use crate::types::Stage;

use super::checkpoint::{read_snapshot, Layout};
use super::export::{read_candidates, CandidateRecord};
use super::report::group_thousands;
use super::Step;

/// Percentage with one decimal; `-` for an empty denominator.
pub fn percent(n: u64, d: u64) -> String {
    if d == 0 {
        return "-".into();
    }
    format!("{:.1}", n as f64 * 100.0 / d as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub surface: String,
    pub label: Label,
    /// Free-text word-formation tag, passed through untouched.
    pub wf_tag: Option<String>,
}

/// Reads `surface<TAB>label[<TAB>wf_tag]`. A header row whose label column
/// reads `label` is skipped; duplicate surfaces are fatal.
pub fn read_gold(path: &Path) -> Result<Vec<GoldRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() < 2 {
            return Err(Error::parse(
                path,
                i + 1,
                "expected `surface<TAB>label[<TAB>wf_tag]`",
            ));
        }
        if out.is_empty() && cols[1].eq_ignore_ascii_case("label") {
            continue;
        }
        let label = Label::parse_answer(cols[1])
            .ok_or_else(|| Error::parse(path, i + 1, format!("unknown gold label `{}`", cols[1])))?;
        let surface = cols[0].to_lowercase();
        if !seen.insert(surface.clone()) {
            return Err(Error::DuplicateGold(surface));
        }
        out.push(GoldRecord {
            surface,
            label,
            wf_tag: cols.get(2).filter(|s| !s.is_empty()).map(|s| s.to_string()),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldEval {
    /// Candidates found in the gold file.
    pub annotated: u64,
    /// Candidates absent from the gold file; excluded from percentages.
    pub missing: Vec<String>,
    pub by_label: BTreeMap<Label, u64>,
    pub lexical_innovation: u64,
    pub non_neologism: u64,
    /// Pipeline final label (or `-`) against gold label.
    pub cross_tab: BTreeMap<String, BTreeMap<Label, u64>>,
}

pub fn eval_gold(candidates: &[CandidateRecord], gold: &[GoldRecord]) -> Result<GoldEval> {
    let mut index: HashMap<&str, Label> = HashMap::new();
    for g in gold {
        if index.insert(g.surface.as_str(), g.label).is_some() {
            return Err(Error::DuplicateGold(g.surface.clone()));
        }
    }
    let mut e = GoldEval {
        annotated: 0,
        missing: Vec::new(),
        by_label: Label::ANSWERS.iter().map(|&l| (l, 0)).collect(),
        lexical_innovation: 0,
        non_neologism: 0,
        cross_tab: BTreeMap::new(),
    };
    for c in candidates {
        let Some(&label) = index.get(c.surface.as_str()) else {
            e.missing.push(c.surface.clone());
            continue;
        };
        e.annotated += 1;
        *e.by_label.entry(label).or_default() += 1;
        if label.is_innovation() {
            e.lexical_innovation += 1;
        } else {
            e.non_neologism += 1;
        }
        let key = c.final_label.map_or("-".to_string(), |l| l.to_string());
        *e.cross_tab.entry(key).or_default().entry(label).or_default() += 1;
    }
    if !e.missing.is_empty() {
        log::warn!("{} candidates have no gold label", e.missing.len());
    }
    Ok(e)
}

impl GoldEval {
    pub fn innovation_percent(&self) -> String {
        percent(self.lexical_innovation, self.annotated)
    }

    pub fn to_text(&self) -> String {
        let n = self.annotated;
        let mut out = String::new();
        let row = |out: &mut String, name: &str, count: u64| {
            let _ = writeln!(
                out,
                "{name:<22} {:>9} {:>7}",
                group_thousands(count),
                percent(count, n)
            );
        };
        let _ = writeln!(out, "{:<22} {:>9} {:>7}", "Gold label", "Count", "%");
        row(&mut out, "Lexical innovation", self.lexical_innovation);
        for l in [Label::Neologism, Label::Entity] {
            row(&mut out, &format!("  {l}"), self.by_label[&l]);
        }
        row(&mut out, "Non-neologism", self.non_neologism);
        for l in [Label::Foreign, Label::None] {
            row(&mut out, &format!("  {l}"), self.by_label[&l]);
        }
        row(&mut out, "Total", n);
        if self.cross_tab.len() > 1 || !self.cross_tab.contains_key("-") {
            let _ = writeln!(out, "\nPipeline label by gold label");
            let _ = write!(out, "{:<12}", "");
            for l in Label::ANSWERS {
                let _ = write!(out, " {:>10}", l.as_str());
            }
            out.push('\n');
            for (k, row) in &self.cross_tab {
                let _ = write!(out, "{k:<12}");
                for l in Label::ANSWERS {
                    let _ = write!(out, " {:>10}", row.get(&l).copied().unwrap_or(0));
                }
                out.push('\n');
            }
        }
        if !self.missing.is_empty() {
            let _ = writeln!(
                out,
                "\n{} candidates missing from the gold file: {}",
                self.missing.len(),
                self.missing.join(", ")
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RecallStatus {
    /// Detected by the pipeline.
    #[serde(rename = "TP")]
    Tp,
    /// Missed although post-cutoff.
    #[serde(rename = "FN")]
    Fn,
    /// Attested before the cutoff, so correctly excluded.
    #[serde(rename = "pre-15")]
    Pre15,
    /// Left out of the evaluation.
    #[serde(rename = "excl")]
    Excl,
}

impl RecallStatus {
    pub const ALL: [RecallStatus; 4] = [
        RecallStatus::Tp,
        RecallStatus::Fn,
        RecallStatus::Pre15,
        RecallStatus::Excl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecallStatus::Tp => "TP",
            RecallStatus::Fn => "FN",
            RecallStatus::Pre15 => "pre-15",
            RecallStatus::Excl => "excl",
        }
    }
}

impl fmt::Display for RecallStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecallStatus {
    type Err = String;

    /// Case, punctuation and spacing are ignored: `pre-15`, `PRE15` and
    /// `excl.` all parse.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "tp" => Ok(RecallStatus::Tp),
            "fn" => Ok(RecallStatus::Fn),
            "pre15" => Ok(RecallStatus::Pre15),
            "excl" | "excluded" => Ok(RecallStatus::Excl),
            _ => Err(format!("unknown status `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecallRecord {
    pub surface: String,
    pub year: String,
    pub source: String,
    /// Empty in a list whose TP/FN split is left to the pipeline.
    pub status: Option<RecallStatus>,
}

/// Reads `surface<TAB>year<TAB>source<TAB>status`. A header row starting
/// with `surface` or `word` is skipped.
pub fn read_reference(path: &Path) -> Result<Vec<RecallRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if out.is_empty() && matches!(cols[0].to_lowercase().as_str(), "surface" | "word") {
            continue;
        }
        let status = match cols.get(3).filter(|s| !s.is_empty()) {
            Some(s) => Some(s.parse().map_err(|m: String| Error::parse(path, i + 1, m))?),
            None => None,
        };
        let surface = cols[0].to_lowercase();
        if !seen.insert(surface.clone()) {
            return Err(Error::parse(path, i + 1, format!("`{surface}` listed twice")));
        }
        out.push(RecallRecord {
            surface,
            year: cols.get(1).unwrap_or(&"").to_string(),
            source: cols.get(2).unwrap_or(&"").to_string(),
            status,
        });
    }
    Ok(out)
}

/// Where each token left the cascade, read back from a work directory.
#[derive(Debug, Clone, Default)]
pub struct StageLedger {
    tokenized: HashSet<String>,
    removed_at: HashMap<String, Stage>,
    exported: HashSet<String>,
}

impl StageLedger {
    pub fn load(work_dir: &Path) -> Result<Self> {
        let layout = Layout::new(work_dir);
        let mut ledger = StageLedger::default();
        let tok = layout.snapshot(Step::Tokenize);
        if tok.exists() {
            ledger.tokenized = read_snapshot(&tok)?.into_iter().map(|t| t.surface).collect();
        }
        for step in [
            Step::Vocab,
            Step::Pattern,
            Step::Freq,
            Step::Lang,
            Step::Vote,
            Step::Verify,
        ] {
            let p = layout.removed(step);
            if !p.exists() {
                continue;
            }
            for t in read_snapshot(&p)? {
                // a flagged token that misses the threshold was lost to its flag
                let stage = match step {
                    Step::Freq if t.flags.concat => Stage::Concat,
                    Step::Freq if t.flags.typo => Stage::Typo,
                    s => s.stage().expect("cascade step"),
                };
                ledger.removed_at.insert(t.surface, stage);
            }
        }
        let c = layout.candidates();
        if c.exists() {
            ledger.exported = read_candidates(&c)?.into_iter().map(|r| r.surface).collect();
        }
        Ok(ledger)
    }

    pub fn from_parts(
        tokenized: impl IntoIterator<Item = String>,
        removed_at: impl IntoIterator<Item = (String, Stage)>,
        exported: impl IntoIterator<Item = String>,
    ) -> Self {
        StageLedger {
            tokenized: tokenized.into_iter().collect(),
            removed_at: removed_at.into_iter().collect(),
            exported: exported.into_iter().collect(),
        }
    }

    pub fn is_exported(&self, surface: &str) -> bool {
        self.exported.contains(surface)
    }

    /// The stage that lost `surface`: tokenization when it never appeared,
    /// `None` when it is exported or still in flight.
    pub fn lost_at(&self, surface: &str) -> Option<Stage> {
        if self.exported.contains(surface) {
            return None;
        }
        if !self.tokenized.contains(surface) {
            return Some(Stage::Tokenize);
        }
        self.removed_at.get(surface).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecallItem {
    pub surface: String,
    pub status: RecallStatus,
    pub lost_at: Option<Stage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecallEval {
    pub items: Vec<RecallItem>,
    pub counts: BTreeMap<RecallStatus, u64>,
    pub true_positives: u64,
    /// TP + FN.
    pub evaluated: u64,
}

/// Per-item status and recall = TP / (TP + FN).
///
/// Without a ledger the statuses in the list are taken as given. With one,
/// items marked pre-15 or excl keep that status and every other item is TP
/// if exported and FN otherwise, annotated with the stage that lost it.
pub fn eval_recall(reference: &[RecallRecord], ledger: Option<&StageLedger>) -> Result<RecallEval> {
    let mut items = Vec::with_capacity(reference.len());
    for r in reference {
        let (status, lost_at) = match (r.status, ledger) {
            (Some(s @ (RecallStatus::Pre15 | RecallStatus::Excl)), _) => (s, None),
            (_, Some(l)) => {
                if l.is_exported(&r.surface) {
                    (RecallStatus::Tp, None)
                } else {
                    (RecallStatus::Fn, l.lost_at(&r.surface))
                }
            }
            (Some(s), None) => (s, None),
            (None, None) => {
                return Err(Error::Config(format!(
                    "`{}` has no status; pass a work directory to derive it",
                    r.surface
                )))
            }
        };
        items.push(RecallItem {
            surface: r.surface.clone(),
            status,
            lost_at,
        });
    }
    let mut counts: BTreeMap<RecallStatus, u64> = RecallStatus::ALL.iter().map(|&s| (s, 0)).collect();
    for i in &items {
        *counts.entry(i.status).or_default() += 1;
    }
    let tp = counts[&RecallStatus::Tp];
    Ok(RecallEval {
        evaluated: tp + counts[&RecallStatus::Fn],
        true_positives: tp,
        items,
        counts,
    })
}

impl RecallEval {
    pub fn recall(&self) -> Option<f64> {
        (self.evaluated > 0).then(|| self.true_positives as f64 / self.evaluated as f64)
    }

    /// `20/53 = 37.7%`
    pub fn recall_text(&self) -> String {
        format!(
            "{}/{} = {}%",
            self.true_positives,
            self.evaluated,
            percent(self.true_positives, self.evaluated)
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} reference items", self.items.len());
        for s in RecallStatus::ALL {
            let _ = writeln!(out, "  {:<7} {:>5}", s.as_str(), self.counts[&s]);
        }
        let _ = writeln!(out, "Recall: {}", self.recall_text());
        let misses: Vec<&RecallItem> = self
            .items
            .iter()
            .filter(|i| i.status == RecallStatus::Fn)
            .collect();
        if misses.iter().any(|i| i.lost_at.is_some()) {
            let mut by_stage: BTreeMap<Option<Stage>, Vec<&str>> = BTreeMap::new();
            for i in misses {
                by_stage.entry(i.lost_at).or_default().push(&i.surface);
            }
            let _ = writeln!(out, "\nFalse negatives by losing stage");
            for (stage, words) in by_stage {
                let name = stage.map_or("not removed", |s| s.title());
                let _ = writeln!(out, "  {name} ({}): {}", words.len(), words.join(", "));
            }
        }
        out
    }
}
