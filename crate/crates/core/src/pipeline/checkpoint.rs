//! Work-directory layout: a manifest of completed steps plus one snapshot
//! per step.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::TokenType;

use super::Step;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;
pub const SNAPSHOT_HEADER: &str = "surface\tcount\tn_subreddits\tflags\ttrace";

/// File names inside a work directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    /// Token types leaving a step. Spell steps keep flagged tokens here too.
    pub fn snapshot(&self, step: Step) -> PathBuf {
        self.root.join("stages").join(format!("{step}.tsv"))
    }

    /// Tokens a step removed, each traced with its reason.
    pub fn removed(&self, step: Step) -> PathBuf {
        self.root.join("stages").join(format!("{step}.removed.tsv"))
    }

    /// Tokens a spell step flagged into its pool.
    pub fn flagged(&self, step: Step) -> PathBuf {
        self.root.join("stages").join(format!("{step}.flagged.tsv"))
    }

    pub fn contexts(&self) -> PathBuf {
        self.root.join("contexts.ndjson")
    }

    /// Per-endpoint results logs for one version of an LLM step.
    pub fn results(&self, step: Step, hash: &str) -> PathBuf {
        self.root
            .join("results")
            .join(format!("{step}-{}", &hash[..hash.len().min(12)]))
    }

    /// Labels after voting, before verification.
    pub fn votes(&self) -> PathBuf {
        self.root.join("votes.ndjson")
    }

    pub fn classifications(&self) -> PathBuf {
        self.root.join("classifications.ndjson")
    }

    pub fn candidates(&self) -> PathBuf {
        self.root.join("candidates.ndjson")
    }

    pub fn candidates_tsv(&self) -> PathBuf {
        self.root.join("candidates.tsv")
    }

    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn report_txt(&self) -> PathBuf {
        self.root.join("report.txt")
    }

    pub fn cache(&self) -> PathBuf {
        self.root.join("cache")
    }

    /// Files a completed step must have left behind.
    pub fn outputs(&self, step: Step) -> Vec<PathBuf> {
        match step {
            Step::Contexts => vec![self.contexts()],
            Step::Vote => vec![self.snapshot(step), self.votes()],
            Step::Verify => vec![self.snapshot(step), self.classifications()],
            _ => vec![self.snapshot(step)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub hash: String,
    /// Size of the step's output set.
    pub remaining: u64,
    pub removed: u64,
    pub reintegrated: u64,
    /// Step-specific counters.
    pub stats: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub steps: BTreeMap<String, StepRecord>,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            version: MANIFEST_VERSION,
            steps: BTreeMap::new(),
        }
    }
}

impl Manifest {
    /// Loads the manifest, or an empty one when the directory is fresh.
    pub fn load(work_dir: &Path) -> Result<Self> {
        let path = work_dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Manifest::default());
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Checkpoint(format!(
                "{}: manifest version {} is not supported",
                path.display(),
                m.version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, work_dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(&work_dir.join(MANIFEST_FILE), text.as_bytes())
    }
}

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = tmp_path(path);
    {
        let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

pub fn write_snapshot<'a>(path: &Path, tokens: impl IntoIterator<Item = &'a TokenType>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = tmp_path(path);
    {
        let f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut w = BufWriter::new(f);
        let io = |e| Error::io(&tmp, e);
        writeln!(w, "{SNAPSHOT_HEADER}").map_err(io)?;
        for t in tokens {
            writeln!(w, "{}", t.to_tsv_row()).map_err(io)?;
        }
        w.into_inner()
            .map_err(|e| Error::io(&tmp, e.into_error()))?
            .sync_all()
            .map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Vec<TokenType>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if (i == 0 && line == SNAPSHOT_HEADER) || line.is_empty() {
            continue;
        }
        out.push(TokenType::from_tsv_row(&line).map_err(|m| Error::parse(path, i + 1, m))?);
    }
    Ok(out)
}

/// Chained step hash: a step's identity covers its own settings and every
/// upstream step's hash.
pub fn chain_hash(previous: &str, step: &str, settings: &str) -> String {
    let mut h = Sha256::new();
    h.update(previous.as_bytes());
    h.update([0]);
    h.update(step.as_bytes());
    h.update([0]);
    h.update(settings.as_bytes());
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Cheap identity for an input file: path, size and modification time.
/// Missing files fingerprint as `missing` so the error surfaces when the
/// step actually runs.
pub fn file_fingerprint(path: &Path) -> String {
    match fs::metadata(path) {
        Ok(m) => {
            let mtime = m
                .modified()
                .ok()
                .and_then(|t| t.duration_since(std::time::UNIX_EPOCH).ok())
                .map(|d| d.as_nanos())
                .unwrap_or(0);
            format!("{}:{}:{}", path.display(), m.len(), mtime)
        }
        Err(_) => format!("{}:missing", path.display()),
    }
}
