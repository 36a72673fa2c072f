//! Flat `key = value` pipeline configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;

use crate::corpus::CorpusFormat;
use crate::error::{Error, Result};
use crate::lang::DEFAULT_INVENTORY;
use crate::llm::{EndpointConfig, ProviderKind, Role};
use crate::pattern::StructuralRules;

/// Prefix for environment overrides: `NEOSIFT_FREQ_THRESHOLD=50` sets
/// `freq_threshold`.
pub const ENV_PREFIX: &str = "NEOSIFT_";

/// Every top-level key [`PipelineConfig::set`] accepts, in listing order.
/// Endpoint settings use `endpoint.<name>.<field>` on top of these.
pub const KEYS: &[&str] = &[
    "corpus",
    "corpus_format",
    "work_dir",
    "stopwords",
    "cutoff_date",
    "vocab_manifest",
    "vocab",
    "min_len",
    "max_len",
    "spam_len",
    "spam_unique_max",
    "entropy_min",
    "entropy_min_len",
    "char_run",
    "bigram_repeat",
    "rule_pack",
    "freq_dict",
    "max_edit",
    "typo_min_len",
    "typo_freq_floor",
    "typo_floor_on",
    "concat_min_len",
    "concat_min_part",
    "freq_threshold",
    "min_subreddits",
    "lang_detector",
    "lang_target",
    "lang_confidence",
    "lang_inventory",
    "lang_profiles",
    "batch_size",
    "contexts_per_candidate",
    "context_radius",
    "voter_endpoints",
    "verifier_endpoint",
];

/// Keys holding file paths (comma lists for `corpus` and `vocab`).
pub const PATH_KEYS: &[&str] = &[
    "corpus",
    "work_dir",
    "stopwords",
    "vocab_manifest",
    "vocab",
    "freq_dict",
    "lang_profiles",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloorTarget {
    /// The dictionary word a typo would be corrected to.
    Match,
    /// The flagged token itself.
    Token,
}

impl FromStr for FloorTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "match" => Ok(FloorTarget::Match),
            "token" => Ok(FloorTarget::Token),
            _ => Err(Error::Config(format!(
                "typo_floor_on must be match or token, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    Ngram,
    Whatlang,
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ngram" => Ok(DetectorKind::Ngram),
            "whatlang" => Ok(DetectorKind::Whatlang),
            _ => Err(Error::Config(format!(
                "lang_detector must be ngram or whatlang, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Directory relative paths resolve against.
    pub base_dir: PathBuf,

    pub corpus: Vec<PathBuf>,
    pub corpus_format: CorpusFormat,
    pub work_dir: PathBuf,
    pub stopwords: Option<PathBuf>,

    pub cutoff_date: NaiveDate,
    pub vocab_manifest: Option<PathBuf>,
    pub vocab: Vec<PathBuf>,

    pub rules: StructuralRules,
    /// A rule pack file, or `builtin:<lang>`.
    pub rule_pack: String,

    pub freq_dict: Option<PathBuf>,
    pub max_edit: usize,
    pub typo_min_len: usize,
    pub typo_freq_floor: u64,
    pub typo_floor_on: FloorTarget,
    pub concat_min_len: usize,
    pub concat_min_part: usize,

    pub freq_threshold: u64,
    /// 0 disables the dispersion check.
    pub min_subreddits: u32,

    pub lang_detector: DetectorKind,
    pub lang_target: String,
    pub lang_confidence: f64,
    pub lang_inventory: Vec<String>,
    pub lang_profiles: Option<PathBuf>,

    pub batch_size: usize,
    pub contexts_per_candidate: usize,
    pub context_radius: usize,
    pub voter_endpoints: Vec<String>,
    pub verifier_endpoint: Option<String>,
    pub endpoints: BTreeMap<String, EndpointConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let rules = StructuralRules::default();
        PipelineConfig {
            base_dir: PathBuf::from("."),
            corpus: Vec::new(),
            corpus_format: CorpusFormat::Auto,
            work_dir: PathBuf::from("work"),
            stopwords: None,
            cutoff_date: NaiveDate::from_ymd_opt(2015, 1, 1).expect("valid date"),
            vocab_manifest: None,
            vocab: Vec::new(),
            rules,
            rule_pack: "builtin:en".into(),
            freq_dict: None,
            max_edit: 2,
            typo_min_len: 5,
            typo_freq_floor: 100,
            typo_floor_on: FloorTarget::Match,
            concat_min_len: 6,
            concat_min_part: 3,
            freq_threshold: 100,
            min_subreddits: 0,
            lang_detector: DetectorKind::Ngram,
            lang_target: "eng".into(),
            lang_confidence: 0.75,
            lang_inventory: DEFAULT_INVENTORY.iter().map(|s| s.to_string()).collect(),
            lang_profiles: None,
            batch_size: 10,
            contexts_per_candidate: 3,
            context_radius: 120,
            voter_endpoints: Vec::new(),
            verifier_endpoint: None,
            endpoints: BTreeMap::new(),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

impl PipelineConfig {
    /// Sets one key. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        if let Some(rest) = key.strip_prefix("endpoint.") {
            let (name, field) = rest
                .split_once('.')
                .ok_or_else(|| Error::Config(format!("`{key}`: expected endpoint.<name>.<field>")))?;
            let ep = self
                .endpoints
                .entry(name.to_string())
                .or_insert_with(|| EndpointConfig::new(name, ProviderKind::Mock, Role::Voter));
            if field == "provider" {
                // reset provider-dependent defaults
                let mut fresh = EndpointConfig::new(name, value.parse()?, ep.role);
                fresh.mock = std::mem::take(&mut ep.mock);
                *ep = fresh;
                return Ok(());
            }
            return ep.set(field, value);
        }
        let path = |v: &str| PathBuf::from(v);
        let opt_path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        match key {
            "corpus" => self.corpus = list(value).iter().map(|s| path(s)).collect(),
            "corpus_format" => self.corpus_format = value.parse().map_err(Error::Config)?,
            "work_dir" => self.work_dir = path(value),
            "stopwords" => self.stopwords = opt_path(value),
            "cutoff_date" => {
                self.cutoff_date = NaiveDate::parse_from_str(value, "%Y-%m-%d")
                    .map_err(|e| Error::Config(format!("`cutoff_date`: {e}")))?
            }
            "vocab_manifest" => self.vocab_manifest = opt_path(value),
            "vocab" => self.vocab = list(value).iter().map(|s| path(s)).collect(),
            "min_len" => self.rules.min_len = parse_num(key, value)?,
            "max_len" => self.rules.max_len = parse_num(key, value)?,
            "spam_len" => self.rules.spam_len = parse_num(key, value)?,
            "spam_unique_max" => self.rules.spam_unique_max = parse_num(key, value)?,
            "entropy_min" => self.rules.entropy_min = parse_num(key, value)?,
            "entropy_min_len" => self.rules.entropy_min_len = parse_num(key, value)?,
            "char_run" => self.rules.char_run = parse_num(key, value)?,
            "bigram_repeat" => self.rules.bigram_repeat = parse_num(key, value)?,
            "rule_pack" => self.rule_pack = value.to_string(),
            "freq_dict" => self.freq_dict = opt_path(value),
            "max_edit" => self.max_edit = parse_num(key, value)?,
            "typo_min_len" => self.typo_min_len = parse_num(key, value)?,
            "typo_freq_floor" => self.typo_freq_floor = parse_num(key, value)?,
            "typo_floor_on" => self.typo_floor_on = value.parse()?,
            "concat_min_len" => self.concat_min_len = parse_num(key, value)?,
            "concat_min_part" => self.concat_min_part = parse_num(key, value)?,
            "freq_threshold" => self.freq_threshold = parse_num(key, value)?,
            "min_subreddits" => self.min_subreddits = parse_num(key, value)?,
            "lang_detector" => self.lang_detector = value.parse()?,
            "lang_target" => self.lang_target = value.to_string(),
            "lang_confidence" => self.lang_confidence = parse_num(key, value)?,
            "lang_inventory" => self.lang_inventory = list(value),
            "lang_profiles" => self.lang_profiles = opt_path(value),
            "batch_size" => self.batch_size = parse_num(key, value)?,
            "contexts_per_candidate" => self.contexts_per_candidate = parse_num(key, value)?,
            "context_radius" => self.context_radius = parse_num(key, value)?,
            "voter_endpoints" => self.voter_endpoints = list(value),
            "verifier_endpoint" => self.verifier_endpoint = (!value.is_empty()).then(|| value.to_string()),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines. `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected `key = value`"))?;
            self.set(k.trim(), v)
                .map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        }
        Ok(())
    }

    /// Reads a config file; relative paths in it resolve against its
    /// directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig {
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
            ..Default::default()
        };
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    /// Applies `NEOSIFT_<KEY>` variables. Endpoint keys are not overridable
    /// this way.
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<()> {
        let mut found: Vec<(String, String)> = vars
            .into_iter()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|k| (k.to_lowercase(), v)))
            .collect();
        found.sort();
        for (k, v) in found {
            self.set(&k, &v)
                .map_err(|e| Error::Config(format!("{ENV_PREFIX}{}: {e}", k.to_uppercase())))?;
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        self.rules.validate()?;
        if self.rules.min_len == 0 {
            return err("min_len must be >= 1".into());
        }
        if self.max_edit == 0 || self.max_edit > 4 {
            return err(format!("max_edit must be within 1..=4, got {}", self.max_edit));
        }
        if self.concat_min_part == 0 {
            return err("concat_min_part must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.lang_confidence) {
            return err(format!(
                "lang_confidence must be within [0, 1], got {}",
                self.lang_confidence
            ));
        }
        if !self.lang_inventory.contains(&self.lang_target) {
            return err(format!(
                "lang_target `{}` is not in lang_inventory",
                self.lang_target
            ));
        }
        if self.batch_size == 0 {
            return err("batch_size must be >= 1".into());
        }
        if self.contexts_per_candidate == 0 {
            return err("contexts_per_candidate must be >= 1".into());
        }
        if !self.voter_endpoints.is_empty() {
            if self.voter_endpoints.len() < 3 || self.voter_endpoints.len() % 2 == 0 {
                return err(format!(
                    "voter_endpoints needs an odd number of at least 3 voters, got {}",
                    self.voter_endpoints.len()
                ));
            }
            let mut seen = std::collections::BTreeSet::new();
            for v in &self.voter_endpoints {
                if !seen.insert(v) {
                    return err(format!("voter `{v}` listed twice"));
                }
            }
        }
        let named = self.voter_endpoints.iter().chain(self.verifier_endpoint.as_ref());
        for name in named {
            match self.endpoints.get(name) {
                Some(e) => e.validate()?,
                None => return err(format!("endpoint `{name}` has no endpoint.{name}.* settings")),
            }
        }
        if let Some(v) = &self.verifier_endpoint {
            if self.voter_endpoints.contains(v) {
                return err(format!("`{v}` cannot both vote and verify"));
            }
        }
        Ok(())
    }

    pub fn voters(&self) -> Vec<EndpointConfig> {
        self.voter_endpoints
            .iter()
            .filter_map(|n| self.endpoints.get(n).cloned())
            .map(|mut e| {
                e.role = Role::Voter;
                e
            })
            .collect()
    }

    pub fn verifier(&self) -> Option<EndpointConfig> {
        self.verifier_endpoint
            .as_ref()
            .and_then(|n| self.endpoints.get(n).cloned())
            .map(|mut e| {
                e.role = Role::Verifier;
                e
            })
    }

    /// Canonical `key = value` listing of every setting.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let paths = |v: &[PathBuf]| {
            v.iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let opt = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let r = &self.rules;
        let pairs: Vec<(&str, String)> = vec![
            ("corpus", paths(&self.corpus)),
            (
                "corpus_format",
                format!("{:?}", self.corpus_format).to_lowercase(),
            ),
            ("work_dir", self.work_dir.display().to_string()),
            ("stopwords", opt(&self.stopwords)),
            ("cutoff_date", self.cutoff_date.to_string()),
            ("vocab_manifest", opt(&self.vocab_manifest)),
            ("vocab", paths(&self.vocab)),
            ("min_len", r.min_len.to_string()),
            ("max_len", r.max_len.to_string()),
            ("spam_len", r.spam_len.to_string()),
            ("spam_unique_max", r.spam_unique_max.to_string()),
            ("entropy_min", r.entropy_min.to_string()),
            ("entropy_min_len", r.entropy_min_len.to_string()),
            ("char_run", r.char_run.to_string()),
            ("bigram_repeat", r.bigram_repeat.to_string()),
            ("rule_pack", self.rule_pack.clone()),
            ("freq_dict", opt(&self.freq_dict)),
            ("max_edit", self.max_edit.to_string()),
            ("typo_min_len", self.typo_min_len.to_string()),
            ("typo_freq_floor", self.typo_freq_floor.to_string()),
            (
                "typo_floor_on",
                match self.typo_floor_on {
                    FloorTarget::Match => "match".into(),
                    FloorTarget::Token => "token".into(),
                },
            ),
            ("concat_min_len", self.concat_min_len.to_string()),
            ("concat_min_part", self.concat_min_part.to_string()),
            ("freq_threshold", self.freq_threshold.to_string()),
            ("min_subreddits", self.min_subreddits.to_string()),
            (
                "lang_detector",
                match self.lang_detector {
                    DetectorKind::Ngram => "ngram".into(),
                    DetectorKind::Whatlang => "whatlang".into(),
                },
            ),
            ("lang_target", self.lang_target.clone()),
            ("lang_confidence", self.lang_confidence.to_string()),
            ("lang_inventory", self.lang_inventory.join(",")),
            ("lang_profiles", opt(&self.lang_profiles)),
            ("batch_size", self.batch_size.to_string()),
            ("contexts_per_candidate", self.contexts_per_candidate.to_string()),
            ("context_radius", self.context_radius.to_string()),
            ("voter_endpoints", self.voter_endpoints.join(",")),
            (
                "verifier_endpoint",
                self.verifier_endpoint.clone().unwrap_or_default(),
            ),
        ];
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        for (name, e) in &self.endpoints {
            let _ = writeln!(
                out,
                "# endpoint {name}: {}",
                serde_json::to_string(e).expect("serializable")
            );
        }
        out
    }
}
