//! Step-by-step cascade execution with resumable checkpoints.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{
    count_types_par, harvest_contexts, Context, ContextConfig, IngestStats, PostReader, RuleTokenizer,
    Stopwords, TypeCounter,
};
use crate::error::{Error, Result};
use crate::freq::FreqGate;
use crate::lang::{self, LanguageDetector, NgramDetector};
use crate::llm::{
    aggregate, classify_all, verify, Classification, ClassifyOptions, Endpoint, Label, PromptToken,
};
use crate::pattern::{PatternDecision, PatternRuleSet, RulePack};
use crate::spell::{segment, typo_check, DeleteIndex, FrequencyDict, SpellVerdict};
use crate::types::{Decision, Stage, TokenType};
use crate::vocab::{read_manifest, ManifestEntry, VocabularySet};

use super::checkpoint::{
    chain_hash, file_fingerprint, read_snapshot, write_atomic, write_snapshot, Layout, Manifest, StepRecord,
    MANIFEST_FILE,
};
use super::config::{DetectorKind, FloorTarget, PipelineConfig};
use super::export::{read_ndjson, to_tsv, write_ndjson, CandidateRecord};
use super::report::{CascadeReport, CascadeRow};
use super::Step;

const READ_CHUNK: usize = 65_536;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Last step to run; `None` runs everything.
    pub stop_after: Option<Step>,
    /// Also write `candidates.tsv`.
    pub tsv: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub step: Step,
    /// Taken from an earlier run's checkpoint.
    pub resumed: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub work_dir: PathBuf,
    pub steps: Vec<StepOutcome>,
    pub report: CascadeReport,
    pub exported: usize,
}

#[derive(Serialize, Deserialize)]
struct ContextRow {
    surface: String,
    contexts: Vec<Context>,
}

/// Runs the cascade, resuming from every step whose checkpoint still
/// matches the configuration. A recomputed step invalidates every step
/// after it.
pub fn run(config: &PipelineConfig, opts: &RunOptions) -> Result<RunSummary> {
    config.validate()?;
    let layout = Layout::new(config.resolve(&config.work_dir));
    std::fs::create_dir_all(&layout.root).map_err(|e| Error::io(&layout.root, e))?;
    let mut manifest = Manifest::load(&layout.root)?;
    let stop = opts.stop_after.unwrap_or(Step::Verify);
    let mut ctx = RunContext::new(config, &layout);

    let mut outcomes = Vec::new();
    let mut prev_hash = String::new();
    for step in Step::ALL {
        if step > stop {
            break;
        }
        if step == Step::Vote && config.voter_endpoints.is_empty() {
            log::warn!("no voter endpoints configured; stopping before the vote");
            break;
        }
        let hash = chain_hash(&prev_hash, step.id(), &ctx.settings(step));
        let resumable = manifest.steps.get(step.id()).is_some_and(|r| r.hash == hash)
            && layout.outputs(step).iter().all(|p| p.exists());
        if resumable {
            log::info!("{step}: checkpoint is current");
            ctx.forget(step);
        } else {
            log::info!("{step}: running");
            let keep: HashSet<&str> = Step::ALL.iter().filter(|s| **s < step).map(|s| s.id()).collect();
            manifest.steps.retain(|k, _| keep.contains(k.as_str()));
            let record = ctx.execute(step, &hash)?;
            check_conservation(&manifest, step, &record)?;
            manifest.steps.insert(step.id().to_string(), record);
            manifest.save(&layout.root)?;
        }
        outcomes.push(StepOutcome {
            step,
            resumed: resumable,
        });
        prev_hash = hash;
    }

    let last = outcomes.last().map(|o| o.step);
    let exported = match last {
        Some(step) => ctx.export(step, opts.tsv)?,
        None => 0,
    };
    let report = report_from_manifest(&manifest, last);
    write_atomic(&layout.report_json(), report.to_json().as_bytes())?;
    write_atomic(&layout.report_txt(), report.to_text().as_bytes())?;
    Ok(RunSummary {
        work_dir: layout.root.clone(),
        steps: outcomes,
        report,
        exported,
    })
}

fn check_conservation(manifest: &Manifest, step: Step, rec: &StepRecord) -> Result<()> {
    let Some(prev) = step.token_source().filter(|_| step.stage().is_some()) else {
        return Ok(());
    };
    let before = manifest.steps.get(prev.id()).map_or(0, |r| r.remaining);
    let ok = before as i128 - rec.removed as i128 + rec.reintegrated as i128 == rec.remaining as i128;
    debug_assert!(
        ok,
        "{step}: {before} - {} + {} != {}",
        rec.removed, rec.reintegrated, rec.remaining
    );
    if ok {
        Ok(())
    } else {
        Err(Error::Checkpoint(format!(
            "{step}: counts do not balance ({before} - {} + {} != {})",
            rec.removed, rec.reintegrated, rec.remaining
        )))
    }
}

/// Builds the cascade report from the manifest, up to `last`.
pub fn report_from_manifest(manifest: &Manifest, last: Option<Step>) -> CascadeReport {
    let rows = Step::ALL
        .iter()
        .filter(|s| last.is_some_and(|l| **s <= l))
        .filter_map(|s| {
            let stage = s.stage()?;
            let r = manifest.steps.get(s.id())?;
            Some(CascadeRow {
                stage,
                remaining: r.remaining,
                removed: r.removed,
                reintegrated: r.reintegrated,
            })
        })
        .collect();
    CascadeReport::new(rows)
}

/// Loads the report of an existing work directory.
pub fn load_report(work_dir: &Path) -> Result<CascadeReport> {
    if !work_dir.join(MANIFEST_FILE).exists() {
        return Err(Error::Checkpoint(format!(
            "{}: no completed steps",
            work_dir.display()
        )));
    }
    let manifest = Manifest::load(work_dir)?;
    let last = Step::ALL
        .iter()
        .rev()
        .find(|s| manifest.steps.contains_key(s.id()))
        .copied();
    Ok(report_from_manifest(&manifest, last))
}

struct RunContext<'a> {
    config: &'a PipelineConfig,
    layout: &'a Layout,
    tokenizer: Option<RuleTokenizer>,
    dict: Option<Option<FrequencyDict>>,
    /// Output of the most recently executed step, kept to skip a reload.
    held: Option<(Step, Vec<TokenType>)>,
}

impl<'a> RunContext<'a> {
    fn new(config: &'a PipelineConfig, layout: &'a Layout) -> Self {
        RunContext {
            config,
            layout,
            tokenizer: None,
            dict: None,
            held: None,
        }
    }

    fn path(&self, p: &Path) -> PathBuf {
        self.config.resolve(p)
    }

    fn fp(&self, p: &Path) -> String {
        file_fingerprint(&self.path(p))
    }

    fn opt_fp(&self, p: &Option<PathBuf>) -> String {
        p.as_ref().map(|p| self.fp(p)).unwrap_or_else(|| "-".into())
    }

    /// Everything that determines a step's output besides its input.
    fn settings(&self, step: Step) -> String {
        let c = self.config;
        let mut s = String::new();
        match step {
            Step::Tokenize => {
                for p in &c.corpus {
                    let _ = writeln!(s, "corpus {}", self.fp(p));
                }
                let _ = writeln!(
                    s,
                    "format {:?}\nstopwords {}",
                    c.corpus_format,
                    self.opt_fp(&c.stopwords)
                );
            }
            Step::Vocab => {
                let _ = writeln!(s, "cutoff {}", c.cutoff_date);
                for e in self.vocab_entries().unwrap_or_default() {
                    let _ = writeln!(
                        s,
                        "source {} {:?} {}",
                        e.name,
                        e.cutoff,
                        file_fingerprint(&e.path)
                    );
                }
                let _ = writeln!(s, "manifest {}", self.opt_fp(&c.vocab_manifest));
            }
            Step::Pattern => {
                let _ = writeln!(s, "{:?}\npack {}", c.rules, c.rule_pack);
                if !c.rule_pack.starts_with("builtin:") {
                    let _ = writeln!(s, "{}", self.fp(Path::new(&c.rule_pack)));
                }
            }
            Step::Concat => {
                let _ = writeln!(
                    s,
                    "dict {}\n{} {}",
                    self.opt_fp(&c.freq_dict),
                    c.concat_min_len,
                    c.concat_min_part
                );
            }
            Step::Typo => {
                let _ = writeln!(
                    s,
                    "dict {}\n{} {} {} {:?}",
                    self.opt_fp(&c.freq_dict),
                    c.max_edit,
                    c.typo_min_len,
                    c.typo_freq_floor,
                    c.typo_floor_on
                );
            }
            Step::Freq => {
                let _ = writeln!(s, "{} {}", c.freq_threshold, c.min_subreddits);
            }
            Step::Lang => {
                let _ = writeln!(
                    s,
                    "{:?} {} {} {}",
                    c.lang_detector,
                    c.lang_target,
                    c.lang_confidence,
                    c.lang_inventory.join(",")
                );
                if let Some(dir) = &c.lang_profiles {
                    for code in &c.lang_inventory {
                        let _ = writeln!(
                            s,
                            "{}",
                            file_fingerprint(&self.path(dir).join(format!("{code}.tri")))
                        );
                    }
                }
            }
            Step::Contexts => {
                let _ = writeln!(s, "{} {}", c.contexts_per_candidate, c.context_radius);
            }
            Step::Vote => {
                let _ = writeln!(s, "batch {}", c.batch_size);
                for e in c.voters() {
                    let _ = writeln!(s, "{}", serde_json::to_string(&e).expect("serializable"));
                    if let Some(p) = &e.mock.labels_path {
                        let _ = writeln!(s, "{}", self.fp(p));
                    }
                }
            }
            Step::Verify => {
                let _ = writeln!(s, "batch {}", c.batch_size);
                if let Some(e) = c.verifier() {
                    let _ = writeln!(s, "{}", serde_json::to_string(&e).expect("serializable"));
                    if let Some(p) = &e.mock.labels_path {
                        let _ = writeln!(s, "{}", self.fp(p));
                    }
                }
            }
        }
        s
    }

    fn forget(&mut self, step: Step) {
        if self.held.as_ref().is_some_and(|(s, _)| *s != step) {
            self.held = None;
        }
    }

    fn tokenizer(&mut self) -> Result<&RuleTokenizer> {
        if self.tokenizer.is_none() {
            let stops = match &self.config.stopwords {
                Some(p) => Stopwords::from_file(self.path(p))?,
                None => Stopwords::english(),
            };
            self.tokenizer = Some(RuleTokenizer::new(stops));
        }
        Ok(self.tokenizer.as_ref().expect("just set"))
    }

    fn dict(&mut self) -> Result<Option<&FrequencyDict>> {
        if self.dict.is_none() {
            let d = match &self.config.freq_dict {
                Some(p) => Some(FrequencyDict::load(self.path(p))?),
                None => {
                    log::warn!("no frequency dictionary configured; spell checks flag nothing");
                    None
                }
            };
            self.dict = Some(d);
        }
        Ok(self.dict.as_ref().and_then(|d| d.as_ref()))
    }

    fn vocab_entries(&self) -> Result<Vec<ManifestEntry>> {
        let mut entries = match &self.config.vocab_manifest {
            Some(p) => read_manifest(self.path(p))?,
            None => Vec::new(),
        };
        for p in &self.config.vocab {
            let path = self.path(p);
            entries.push(ManifestEntry {
                name: path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                path,
                cutoff: None,
            });
        }
        Ok(entries)
    }

    /// Token snapshot produced by `step`.
    fn tokens(&mut self, step: Step) -> Result<Vec<TokenType>> {
        match self.held.take() {
            Some((s, v)) if s == step => Ok(v),
            _ => read_snapshot(&self.layout.snapshot(step)),
        }
    }

    fn input(&mut self, step: Step) -> Result<Vec<TokenType>> {
        self.tokens(step.token_source().expect("step has an input"))
    }

    fn execute(&mut self, step: Step, hash: &str) -> Result<StepRecord> {
        let l = self.layout;
        let (output, rec) = match step {
            Step::Tokenize => self.run_tokenize()?,
            Step::Vocab => {
                let input = self.input(step)?;
                self.run_vocab(input)?
            }
            Step::Pattern => {
                let input = self.input(step)?;
                self.run_pattern(input)?
            }
            Step::Concat => {
                let input = self.input(step)?;
                self.run_concat(input)?
            }
            Step::Typo => {
                let input = self.input(step)?;
                self.run_typo(input)?
            }
            Step::Freq => {
                let input = self.input(step)?;
                let gate = FreqGate {
                    threshold: self.config.freq_threshold,
                    min_subreddits: (self.config.min_subreddits > 0).then_some(self.config.min_subreddits),
                };
                let (kept, dropped, stats) = gate.split(input);
                write_snapshot(&l.removed(step), &dropped)?;
                let rec = record(kept.len(), stats.removed(), stats.reintegrated(), json!(stats));
                (Some(kept), rec)
            }
            Step::Lang => {
                let input = self.input(step)?;
                let detector = self.detector()?;
                let (kept, removed, stats) =
                    lang::split(input, detector.as_ref(), self.config.lang_confidence);
                write_snapshot(&l.removed(step), &removed)?;
                let rec = record(kept.len(), removed.len() as u64, 0, json!(stats));
                (Some(kept), rec)
            }
            Step::Contexts => {
                let input = self.input(step)?;
                let rec = self.run_contexts(&input)?;
                self.held = Some((Step::Lang, input));
                return Ok(StepRecord {
                    hash: hash.to_string(),
                    ..rec
                });
            }
            Step::Vote => {
                let input = self.input(step)?;
                self.run_vote(input, hash)?
            }
            Step::Verify => {
                let input = self.input(step)?;
                self.run_verify(input, hash)?
            }
        };
        if let Some(out) = output {
            write_snapshot(&l.snapshot(step), &out)?;
            self.held = Some((step, out));
        }
        Ok(StepRecord {
            hash: hash.to_string(),
            ..rec
        })
    }

    fn run_tokenize(&mut self) -> Result<(Option<Vec<TokenType>>, StepRecord)> {
        if self.config.corpus.is_empty() {
            return Err(Error::Config("no corpus files configured".into()));
        }
        let paths: Vec<PathBuf> = self.config.corpus.iter().map(|p| self.path(p)).collect();
        let format = self.config.corpus_format;
        let tokenizer = self.tokenizer()?.clone();
        let mut total = TypeCounter::new();
        let mut ingest = IngestStats::default();
        for p in &paths {
            let mut reader = PostReader::open(p, format)?;
            total.merge(count_types_par(reader.by_ref(), &tokenizer, READ_CHUNK)?);
            let s = reader.stats();
            ingest.lines += s.lines;
            ingest.yielded += s.yielded;
            ingest.skipped += s.skipped;
            ingest.malformed += s.malformed;
            if s.malformed > 0 {
                log::warn!("{}: skipped {} malformed records", p.display(), s.malformed);
            }
        }
        let tokens_seen = total.total_tokens();
        let types = total.into_token_types();
        let stats = json!({
            "records": ingest.lines,
            "posts": ingest.yielded,
            "skipped": ingest.skipped,
            "malformed": ingest.malformed,
            "tokens": tokens_seen,
        });
        let rec = record(types.len(), 0, 0, stats);
        Ok((Some(types), rec))
    }

    fn run_vocab(&mut self, input: Vec<TokenType>) -> Result<(Option<Vec<TokenType>>, StepRecord)> {
        let entries = self.vocab_entries()?;
        for e in &entries {
            match e.cutoff {
                Some(d) if d > self.config.cutoff_date => {
                    return Err(Error::Config(format!(
                        "vocabulary source `{}` has cutoff {d}, after the configured cutoff {}",
                        e.name, self.config.cutoff_date
                    )))
                }
                None => log::warn!("vocabulary source `{}` declares no cutoff date", e.name),
                _ => {}
            }
        }
        if entries.is_empty() {
            log::warn!("no reference vocabulary configured; nothing is excluded as known");
        }
        let vocab = VocabularySet::load_manifest_entries(&entries)?;
        let (kept, removed) = partition(
            input,
            |t| !vocab.is_known(&t.surface),
            Stage::Vocab,
            |_| "known".into(),
        );
        write_snapshot(&self.layout.removed(Step::Vocab), &removed)?;
        let sources: Vec<_> = vocab
            .sources()
            .iter()
            .map(|s| json!({"name": s.name, "entries": s.entries, "cutoff": s.cutoff.map(|d| d.to_string())}))
            .collect();
        let stats = json!({"vocabulary": vocab.len(), "sources": sources, "cutoff_date": self.config.cutoff_date.to_string()});
        let rec = record(kept.len(), removed.len() as u64, 0, stats);
        Ok((Some(kept), rec))
    }

    fn run_pattern(&mut self, input: Vec<TokenType>) -> Result<(Option<Vec<TokenType>>, StepRecord)> {
        let pack = match self.config.rule_pack.strip_prefix("builtin:") {
            Some(lang) => RulePack::builtin(lang)
                .ok_or_else(|| Error::Config(format!("no built-in rule pack for `{lang}`")))?,
            None => RulePack::from_file(self.path(Path::new(&self.config.rule_pack)))?,
        };
        let rules = PatternRuleSet::new(self.config.rules.clone(), pack)?;
        let decisions: Vec<PatternDecision> = input.par_iter().map(|t| rules.check(&t.surface)).collect();
        let mut by_reason: BTreeMap<&str, u64> = BTreeMap::new();
        let mut kept = Vec::new();
        let mut removed = Vec::new();
        for (mut t, d) in input.into_iter().zip(decisions) {
            match d {
                PatternDecision::Pass => {
                    t.record(Stage::Pattern, Decision::Pass);
                    kept.push(t);
                }
                PatternDecision::Reject(r) => {
                    *by_reason.entry(r.id()).or_default() += 1;
                    t.record(Stage::Pattern, Decision::Reject(r.id().into()));
                    removed.push(t);
                }
            }
        }
        write_snapshot(&self.layout.removed(Step::Pattern), &removed)?;
        let rec = record(
            kept.len(),
            removed.len() as u64,
            0,
            json!({"by_reason": by_reason}),
        );
        Ok((Some(kept), rec))
    }

    fn run_concat(&mut self, mut input: Vec<TokenType>) -> Result<(Option<Vec<TokenType>>, StepRecord)> {
        let (min_len, min_part) = (self.config.concat_min_len, self.config.concat_min_part);
        let verdicts: Vec<bool> = match self.dict()? {
            Some(dict) => input
                .par_iter()
                .map(|t| {
                    matches!(
                        segment(&t.surface, dict, min_len, min_part),
                        SpellVerdict::Concat { .. }
                    )
                })
                .collect(),
            None => vec![false; input.len()],
        };
        for (t, concat) in input.iter_mut().zip(verdicts) {
            if concat {
                t.flags.concat = true;
                t.record(Stage::Concat, Decision::Flag);
            } else {
                t.record(Stage::Concat, Decision::Pass);
            }
        }
        self.finish_spell(Step::Concat, input, |t| t.flags.concat)
    }

    fn run_typo(&mut self, mut input: Vec<TokenType>) -> Result<(Option<Vec<TokenType>>, StepRecord)> {
        let c = self.config;
        let (floor_on, floor, min_len, max_edit) =
            (c.typo_floor_on, c.typo_freq_floor, c.typo_min_len, c.max_edit);
        let index = self.delete_index()?;
        let verdicts: Vec<bool> = match (self.dict()?, &index) {
            (Some(dict), Some(index)) => input
                .par_iter()
                .map(|t| {
                    if t.flags.concat {
                        return false;
                    }
                    let (match_floor, token_ok) = match floor_on {
                        FloorTarget::Match => (floor, true),
                        FloorTarget::Token => (0, t.count > floor),
                    };
                    token_ok
                        && matches!(
                            typo_check(&t.surface, index, dict, min_len, match_floor),
                            SpellVerdict::Typo { .. }
                        )
                })
                .collect(),
            _ => vec![false; input.len()],
        };
        debug_assert!(index.as_ref().is_none_or(|i| i.max_edit() == max_edit));
        for (t, typo) in input.iter_mut().zip(verdicts) {
            if t.flags.concat {
                continue;
            }
            if typo {
                t.flags.typo = true;
                t.record(Stage::Typo, Decision::Flag);
            } else {
                t.record(Stage::Typo, Decision::Pass);
            }
        }
        self.finish_spell(Step::Typo, input, |t| t.flags.typo)
    }

    /// Spell steps keep every token in their snapshot; only the unflagged
    /// ones count as remaining.
    fn finish_spell(
        &mut self,
        step: Step,
        tokens: Vec<TokenType>,
        newly: impl Fn(&TokenType) -> bool,
    ) -> Result<(Option<Vec<TokenType>>, StepRecord)> {
        let pool: Vec<&TokenType> = tokens.iter().filter(|t| newly(t)).collect();
        write_snapshot(&self.layout.flagged(step), pool.iter().copied())?;
        let flagged = pool.len() as u64;
        let unflagged = tokens.iter().filter(|t| !t.flags.any()).count() as u64;
        let rec = StepRecord {
            hash: String::new(),
            remaining: unflagged,
            removed: flagged,
            reintegrated: 0,
            stats: json!({"flagged": flagged, "pool_total": tokens.len() as u64 - unflagged}),
        };
        Ok((Some(tokens), rec))
    }

    /// Builds the deletion index, or loads it from the work-dir cache.
    fn delete_index(&mut self) -> Result<Option<DeleteIndex>> {
        let layout = self.layout;
        let max_edit = self.config.max_edit;
        let key = chain_hash(
            "",
            "index",
            &format!("{} {max_edit}", self.opt_fp(&self.config.freq_dict)),
        );
        let cached = layout.cache().join(format!("delete-{}.idx", &key[..16]));
        let Some(dict) = self.dict()? else {
            return Ok(None);
        };
        if cached.exists() {
            match DeleteIndex::load(&cached) {
                Ok(i) if i.max_edit() == max_edit => return Ok(Some(i)),
                Ok(_) => {}
                Err(e) => log::warn!("ignoring unreadable index cache: {e}"),
            }
        }
        let index = DeleteIndex::build(dict, max_edit);
        std::fs::create_dir_all(layout.cache()).map_err(|e| Error::io(layout.cache(), e))?;
        index.save(&cached)?;
        Ok(Some(index))
    }

    fn detector(&self) -> Result<Box<dyn LanguageDetector>> {
        let c = self.config;
        Ok(match c.lang_detector {
            DetectorKind::Ngram => Box::new(match &c.lang_profiles {
                Some(dir) => NgramDetector::from_dir(&self.path(dir), &c.lang_inventory, &c.lang_target)?,
                None => NgramDetector::builtin(&c.lang_inventory, &c.lang_target)?,
            }),
            #[cfg(feature = "whatlang")]
            DetectorKind::Whatlang => {
                Box::new(lang::WhatlangDetector::new(&c.lang_inventory, &c.lang_target)?)
            }
            #[cfg(not(feature = "whatlang"))]
            DetectorKind::Whatlang => return Err(Error::Config("built without the whatlang feature".into())),
        })
    }

    fn run_contexts(&mut self, tokens: &[TokenType]) -> Result<StepRecord> {
        let candidates: HashSet<String> = tokens.iter().map(|t| t.surface.clone()).collect();
        let cfg = ContextConfig {
            k: self.config.contexts_per_candidate,
            radius: self.config.context_radius,
        };
        let tokenizer = self.tokenizer()?.clone();
        let mut found: BTreeMap<String, Vec<Context>> = BTreeMap::new();
        if !candidates.is_empty() {
            for p in &self.config.corpus {
                let path = self.path(p);
                let mut failure = None;
                let posts = PostReader::open(&path, self.config.corpus_format)?.map_while(|r| match r {
                    Ok(p) => Some(p),
                    Err(e) => {
                        failure = Some(e);
                        None
                    }
                });
                let part = harvest_contexts(posts, &candidates, &tokenizer, cfg);
                if let Some(e) = failure {
                    return Err(e);
                }
                merge_contexts(&mut found, part, cfg.k);
            }
        }
        let rows: Vec<ContextRow> = tokens
            .iter()
            .map(|t| ContextRow {
                surface: t.surface.clone(),
                contexts: found.remove(&t.surface).unwrap_or_default(),
            })
            .collect();
        let without = rows.iter().filter(|r| r.contexts.is_empty()).count();
        write_ndjson(&self.layout.contexts(), &rows)?;
        Ok(StepRecord {
            hash: String::new(),
            remaining: rows.len() as u64,
            removed: 0,
            reintegrated: 0,
            stats: json!({"candidates": rows.len(), "without_context": without}),
        })
    }

    fn contexts(&self) -> Result<BTreeMap<String, Vec<Context>>> {
        let p = self.layout.contexts();
        if !p.exists() {
            return Ok(BTreeMap::new());
        }
        Ok(read_ndjson::<ContextRow>(&p)?
            .into_iter()
            .map(|r| (r.surface, r.contexts))
            .collect())
    }

    fn prompt_tokens(&self, tokens: &[TokenType]) -> Result<Vec<PromptToken>> {
        let mut ctx = self.contexts()?;
        Ok(tokens
            .iter()
            .map(|t| PromptToken {
                surface: t.surface.clone(),
                contexts: ctx.remove(&t.surface).unwrap_or_default(),
            })
            .collect())
    }

    fn run_vote(
        &mut self,
        input: Vec<TokenType>,
        hash: &str,
    ) -> Result<(Option<Vec<TokenType>>, StepRecord)> {
        let voters: Vec<Endpoint> = self
            .config
            .voters()
            .into_iter()
            .map(|c| Endpoint::from_config(c, &self.config.base_dir))
            .collect::<Result<_>>()?;
        let prompts = self.prompt_tokens(&input)?;
        let opts = ClassifyOptions {
            batch_size: self.config.batch_size,
            results_dir: self.layout.results(Step::Vote, hash),
        };
        let (votes, ep_stats) = classify_all(&prompts, &voters, &opts)?;
        let classes = aggregate(&votes);
        write_ndjson(&self.layout.votes(), classes.values())?;
        let mut tally: BTreeMap<String, u64> = BTreeMap::new();
        for c in classes.values() {
            *tally.entry(c.tally.to_string()).or_default() += 1;
        }
        let (kept, removed) = partition(
            input,
            |t| classes[&t.surface].majority == Label::Neologism,
            Stage::Vote,
            |t| classes[&t.surface].majority.as_str().to_lowercase(),
        );
        write_snapshot(&self.layout.removed(Step::Vote), &removed)?;
        let stats = json!({"endpoints": ep_stats, "tally": tally});
        let rec = record(kept.len(), removed.len() as u64, 0, stats);
        Ok((Some(kept), rec))
    }

    fn run_verify(
        &mut self,
        input: Vec<TokenType>,
        hash: &str,
    ) -> Result<(Option<Vec<TokenType>>, StepRecord)> {
        let mut classes: BTreeMap<String, Classification> =
            read_ndjson::<Classification>(&self.layout.votes())?
                .into_iter()
                .map(|c| (c.surface.clone(), c))
                .collect();
        let verifier = match self.config.verifier() {
            Some(c) => Some(Endpoint::from_config(c, &self.config.base_dir)?),
            None => {
                log::warn!("no verifier configured; majority labels are final");
                None
            }
        };
        let prompts: BTreeMap<String, PromptToken> = self
            .prompt_tokens(&input)?
            .into_iter()
            .map(|p| (p.surface.clone(), p))
            .collect();
        let opts = ClassifyOptions {
            batch_size: self.config.batch_size,
            results_dir: self.layout.results(Step::Verify, hash),
        };
        let stats = verify(&mut classes, &prompts, verifier.as_ref(), &opts)?;
        write_ndjson(&self.layout.classifications(), classes.values())?;
        let (kept, removed) = partition(
            input,
            |t| classes[&t.surface].is_exported(),
            Stage::Verify,
            |t| {
                format!(
                    "verifier:{}",
                    classes[&t.surface].final_label.as_str().to_lowercase()
                )
            },
        );
        write_snapshot(&self.layout.removed(Step::Verify), &removed)?;
        let rec = record(kept.len(), removed.len() as u64, 0, json!(stats));
        Ok((Some(kept), rec))
    }

    /// Writes the candidate export for the run's last step.
    fn export(&mut self, last: Step, tsv: bool) -> Result<usize> {
        let token_step = if last == Step::Contexts { Step::Lang } else { last };
        let tokens = self.tokens(token_step)?;
        let mut contexts = if last >= Step::Contexts {
            self.contexts()?
        } else {
            BTreeMap::new()
        };
        let classes_path = match last {
            Step::Verify => Some(self.layout.classifications()),
            Step::Vote => Some(self.layout.votes()),
            _ => None,
        };
        let classes: BTreeMap<String, Classification> = match classes_path {
            Some(p) => read_ndjson::<Classification>(&p)?
                .into_iter()
                .map(|c| (c.surface.clone(), c))
                .collect(),
            None => BTreeMap::new(),
        };
        let records: Vec<CandidateRecord> = tokens
            .iter()
            .filter(|t| !t.flags.any() || token_step >= Step::Freq)
            .map(|t| CandidateRecord::new(t, contexts.get(&t.surface), classes.get(&t.surface)))
            .collect();
        contexts.clear();
        write_ndjson(&self.layout.candidates(), &records)?;
        if tsv {
            write_atomic(&self.layout.candidates_tsv(), to_tsv(&records).as_bytes())?;
        }
        self.held = Some((token_step, tokens));
        Ok(records.len())
    }
}

fn merge_contexts(into: &mut BTreeMap<String, Vec<Context>>, part: BTreeMap<String, Vec<Context>>, k: usize) {
    for (s, list) in part {
        let slot = into.entry(s).or_default();
        for c in list {
            if slot.len() >= k {
                break;
            }
            if !slot.iter().any(|x| x.subreddit == c.subreddit) {
                slot.push(c);
            }
        }
    }
}

fn partition(
    input: Vec<TokenType>,
    keep: impl Fn(&TokenType) -> bool,
    stage: Stage,
    reason: impl Fn(&TokenType) -> String,
) -> (Vec<TokenType>, Vec<TokenType>) {
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for mut t in input {
        if keep(&t) {
            t.record(stage, Decision::Pass);
            kept.push(t);
        } else {
            let r = reason(&t);
            t.record(stage, Decision::Reject(r));
            removed.push(t);
        }
    }
    (kept, removed)
}

fn record(remaining: usize, removed: u64, reintegrated: u64, stats: serde_json::Value) -> StepRecord {
    StepRecord {
        hash: String::new(),
        remaining: remaining as u64,
        removed,
        reintegrated,
        stats,
    }
}
