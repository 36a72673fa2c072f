use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::checkpoint::{response_hash, ResultRecord, ResultsLog, TemplateUsed};
use super::endpoint::{EndpointConfig, Role};
use super::label::Label;
use super::parse::parse_response;
use super::prompt::{render_prompt, PromptToken, Template};
use super::provider::{build_provider, CallError, Provider};
use super::ratelimit::{backoff, TokenBucket};
use super::vote::tally;

/// A configured endpoint with its transport.
pub struct Endpoint {
    pub config: EndpointConfig,
    pub provider: Box<dyn Provider>,
    bucket: TokenBucket,
}

impl Endpoint {
    pub fn new(config: EndpointConfig, provider: Box<dyn Provider>) -> Self {
        let bucket = TokenBucket::per_minute(config.requests_per_minute, config.burst);
        Endpoint {
            config,
            provider,
            bucket,
        }
    }

    pub fn from_config(config: EndpointConfig, base_dir: &Path) -> Result<Self> {
        let provider = build_provider(&config, base_dir)?;
        Ok(Self::new(config, provider))
    }

    pub fn name(&self) -> &str {
        &self.config.name
    }

    /// Calls the provider, retrying transient failures with backoff.
    fn call(&self, prompt: &str) -> Result<String> {
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                std::thread::sleep(backoff(self.config.backoff_ms, attempt - 1));
            }
            self.bucket.acquire();
            match self.provider.complete(prompt) {
                Ok(text) => return Ok(text),
                Err(CallError::Transient(m)) => {
                    log::debug!("{}: attempt {} failed: {m}", self.name(), attempt + 1);
                    last = m;
                }
                Err(CallError::Fatal(m)) => {
                    return Err(Error::EndpointDown {
                        endpoint: self.name().to_string(),
                        message: m,
                    })
                }
            }
        }
        Err(Error::EndpointDown {
            endpoint: self.name().to_string(),
            message: format!("gave up after {} attempts: {last}", self.config.max_retries + 1),
        })
    }
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub batch_size: usize,
    /// Directory holding one results file per endpoint.
    pub results_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointStats {
    /// Labels taken from an earlier run's results file.
    pub resumed: u64,
    pub batched: u64,
    /// Labels obtained from the one-token retry.
    pub retried: u64,
    /// Surfaces whose answers never parsed; recorded as NONE.
    pub unparseable: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EndpointRun {
    pub labels: BTreeMap<String, Label>,
    pub stats: EndpointStats,
}

/// Classifies one batch: the batched prompt first, then a one-token retry
/// for every surface whose answer did not parse.
fn classify_batch(endpoint: &Endpoint, batch: &[&PromptToken]) -> Result<Vec<ResultRecord>> {
    let owned: Vec<PromptToken> = batch.iter().map(|t| (*t).clone()).collect();
    let prompt = render_prompt(&owned, Template::Multi);
    let raw = endpoint.call(&prompt)?;
    let hash = response_hash(&raw);
    let surfaces: Vec<&str> = batch.iter().map(|t| t.surface.as_str()).collect();
    let parsed = parse_response(&raw, &surfaces);
    let mut out = Vec::with_capacity(batch.len());
    for token in batch {
        let record = |label, template_used, raw_excerpt_hash| ResultRecord {
            surface: token.surface.clone(),
            endpoint: endpoint.name().to_string(),
            label,
            template_used,
            raw_excerpt_hash,
        };
        if let Some(label) = parsed[&token.surface] {
            out.push(record(label, TemplateUsed::Multi, hash.clone()));
            continue;
        }
        let prompt = render_prompt(std::slice::from_ref(*token), Template::Single);
        let raw = endpoint.call(&prompt)?;
        let retry_hash = response_hash(&raw);
        match parse_response(&raw, &[token.surface.as_str()])[&token.surface] {
            Some(label) => out.push(record(label, TemplateUsed::Single, retry_hash)),
            None => out.push(record(Label::None, TemplateUsed::Fallback, retry_hash)),
        }
    }
    Ok(out)
}

/// Labels every token with one endpoint. Surfaces already in the endpoint's
/// results file are not asked again. On failure the results file keeps
/// every completed batch, so a rerun resumes where this one stopped.
pub fn classify_endpoint(
    tokens: &[PromptToken],
    endpoint: &Endpoint,
    opts: &ClassifyOptions,
) -> Result<EndpointRun> {
    let done = ResultsLog::read(&opts.results_dir, endpoint.name())?;
    let mut run = EndpointRun::default();
    let mut pending = Vec::new();
    for t in tokens {
        match done.get(&t.surface) {
            Some(r) => {
                run.labels.insert(t.surface.clone(), r.label);
                run.stats.resumed += 1;
            }
            None => pending.push(t),
        }
    }
    if pending.is_empty() {
        return Ok(run);
    }

    let batches: Vec<&[&PromptToken]> = pending.chunks(opts.batch_size.max(1)).collect();
    let log = Mutex::new(ResultsLog::open(&opts.results_dir, endpoint.name())?);
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let results: Mutex<Vec<(usize, Vec<ResultRecord>)>> = Mutex::new(Vec::new());
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let workers = endpoint.config.concurrency.clamp(1, batches.len());

    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| {
                while !abort.load(Ordering::SeqCst) {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(batch) = batches.get(i) else { break };
                    let outcome = classify_batch(endpoint, batch).and_then(|recs| {
                        log.lock()
                            .expect("results log poisoned")
                            .append(&recs)
                            .map(|_| recs)
                    });
                    match outcome {
                        Ok(recs) => results.lock().expect("results poisoned").push((i, recs)),
                        Err(e) => {
                            abort.store(true, Ordering::SeqCst);
                            failure.lock().expect("failure slot poisoned").get_or_insert(e);
                        }
                    }
                }
            });
        }
    });

    if let Some(e) = failure.into_inner().expect("failure slot poisoned") {
        return Err(e);
    }
    let mut results = results.into_inner().expect("results poisoned");
    results.sort_by_key(|r| r.0);
    for rec in results.into_iter().flat_map(|r| r.1) {
        match rec.template_used {
            TemplateUsed::Multi => run.stats.batched += 1,
            TemplateUsed::Single => run.stats.retried += 1,
            TemplateUsed::Fallback => run.stats.unparseable += 1,
        }
        run.labels.insert(rec.surface, rec.label);
    }
    Ok(run)
}

/// surface → endpoint → label
pub type Votes = BTreeMap<String, BTreeMap<String, Label>>;

/// Runs every voter, each on its own thread.
pub fn classify_all(
    tokens: &[PromptToken],
    voters: &[Endpoint],
    opts: &ClassifyOptions,
) -> Result<(Votes, BTreeMap<String, EndpointStats>)> {
    let runs: Vec<Result<EndpointRun>> = std::thread::scope(|s| {
        let handles: Vec<_> = voters
            .iter()
            .map(|e| s.spawn(move || classify_endpoint(tokens, e, opts)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("classifier thread panicked"))
            .collect()
    });
    let mut votes: Votes = tokens
        .iter()
        .map(|t| (t.surface.clone(), BTreeMap::new()))
        .collect();
    let mut stats = BTreeMap::new();
    for (endpoint, run) in voters.iter().zip(runs) {
        let run = run?;
        for (surface, label) in run.labels {
            votes
                .entry(surface)
                .or_default()
                .insert(endpoint.name().to_string(), label);
        }
        stats.insert(endpoint.name().to_string(), run.stats);
    }
    Ok((votes, stats))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub surface: String,
    pub votes: BTreeMap<String, Label>,
    /// Raw vote outcome; UNKNOWN on a tie.
    pub tally: Label,
    /// Tally with ties resolved to NONE.
    pub majority: Label,
    pub verifier: Option<Label>,
    /// Eligible for verification but no verifier answer was obtained.
    pub unverified: bool,
    #[serde(rename = "final")]
    pub final_label: Label,
}

impl Classification {
    pub fn from_votes(surface: impl Into<String>, votes: BTreeMap<String, Label>) -> Self {
        let t = tally(votes.values().copied());
        let majority = if t == Label::Unknown { Label::None } else { t };
        Classification {
            surface: surface.into(),
            votes,
            tally: t,
            majority,
            verifier: None,
            unverified: false,
            final_label: majority,
        }
    }

    /// Whether the candidate reaches the final list: a majority NEOLOGISM
    /// the verifier kept as NEOLOGISM or relabelled ENTITY, or left
    /// unverified.
    pub fn is_exported(&self) -> bool {
        self.majority == Label::Neologism && self.final_label.is_innovation()
    }
}

pub fn aggregate(votes: &Votes) -> BTreeMap<String, Classification> {
    votes
        .iter()
        .map(|(s, v)| (s.clone(), Classification::from_votes(s.clone(), v.clone())))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyStats {
    pub candidates: u64,
    pub confirmed: u64,
    pub relabelled_entity: u64,
    pub rejected_none: u64,
    pub rejected_foreign: u64,
    pub unverified: u64,
}

/// Re-labels majority NEOLOGISM candidates with the verifier. Other
/// candidates keep their majority label. If the verifier cannot be reached
/// the affected candidates keep the majority label and are marked
/// unverified.
pub fn verify(
    classes: &mut BTreeMap<String, Classification>,
    tokens: &BTreeMap<String, PromptToken>,
    verifier: Option<&Endpoint>,
    opts: &ClassifyOptions,
) -> Result<VerifyStats> {
    let eligible: Vec<PromptToken> = classes
        .values()
        .filter(|c| c.majority == Label::Neologism)
        .map(|c| {
            tokens
                .get(&c.surface)
                .cloned()
                .unwrap_or_else(|| PromptToken::bare(c.surface.clone()))
        })
        .collect();
    let mut stats = VerifyStats {
        candidates: eligible.len() as u64,
        ..Default::default()
    };
    let labels = match verifier {
        None => BTreeMap::new(),
        Some(v) => {
            if v.config.role != Role::Verifier {
                log::warn!(
                    "endpoint `{}` used as verifier but configured as {}",
                    v.name(),
                    v.config.role
                );
            }
            match classify_endpoint(&eligible, v, opts) {
                Ok(run) => run.labels,
                Err(e @ Error::EndpointDown { .. }) => {
                    log::warn!("verifier unavailable, keeping majority labels: {e}");
                    ResultsLog::read(&opts.results_dir, v.name())?
                        .into_iter()
                        .map(|(s, r)| (s, r.label))
                        .collect()
                }
                Err(e) => return Err(e),
            }
        }
    };
    for t in &eligible {
        let c = classes
            .get_mut(&t.surface)
            .expect("eligible surface is classified");
        match labels.get(&t.surface) {
            Some(&l) => {
                c.verifier = Some(l);
                c.unverified = false;
                c.final_label = l;
                match l {
                    Label::Neologism => stats.confirmed += 1,
                    Label::Entity => stats.relabelled_entity += 1,
                    Label::Foreign => stats.rejected_foreign += 1,
                    _ => stats.rejected_none += 1,
                }
            }
            None => {
                c.verifier = None;
                c.unverified = true;
                c.final_label = c.majority;
                stats.unverified += 1;
            }
        }
    }
    Ok(stats)
}
