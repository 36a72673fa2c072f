use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::label::Label;

/// How a recorded label was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateUsed {
    Multi,
    Single,
    /// Both templates failed to parse; the label defaulted to NONE.
    Fallback,
}

/// One line of an endpoint's results file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub surface: String,
    pub endpoint: String,
    pub label: Label,
    pub template_used: TemplateUsed,
    /// SHA-256 of the raw response the label came from, hex, first 16 bytes.
    pub raw_excerpt_hash: String,
}

pub fn response_hash(raw: &str) -> String {
    let digest = Sha256::digest(raw.as_bytes());
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Append-only NDJSON log of one endpoint's answers.
#[derive(Debug)]
pub struct ResultsLog {
    path: PathBuf,
    file: File,
}

impl ResultsLog {
    pub fn path_for(dir: &Path, endpoint: &str) -> PathBuf {
        dir.join(format!("{endpoint}.ndjson"))
    }

    /// Records already in the log for `endpoint`, keyed by surface. An
    /// unterminated final line (from an interrupted write) is ignored.
    pub fn read(dir: &Path, endpoint: &str) -> Result<BTreeMap<String, ResultRecord>> {
        let path = Self::path_for(dir, endpoint);
        let mut out = BTreeMap::new();
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(Error::io(&path, e)),
        };
        for (i, line) in text.split_inclusive('\n').enumerate() {
            let Some(line) = line.strip_suffix('\n') else {
                log::warn!("{}: ignoring torn final line", path.display());
                break;
            };
            if line.trim().is_empty() {
                continue;
            }
            let r: ResultRecord = serde_json::from_str(line)
                .map_err(|e| Error::Checkpoint(format!("{}:{}: {e}", path.display(), i + 1)))?;
            if r.endpoint != endpoint {
                return Err(Error::Checkpoint(format!(
                    "{}:{}: record belongs to endpoint `{}`",
                    path.display(),
                    i + 1,
                    r.endpoint
                )));
            }
            out.insert(r.surface.clone(), r);
        }
        Ok(out)
    }

    /// Opens the log for appending, dropping a torn final line first.
    pub fn open(dir: &Path, endpoint: &str) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = Self::path_for(dir, endpoint);
        let mut file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .read(true)
            .write(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes).map_err(|e| Error::io(&path, e))?;
        let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
        if keep < bytes.len() {
            file.set_len(keep as u64).map_err(|e| Error::io(&path, e))?;
        }
        file.seek(SeekFrom::Start(keep as u64))
            .map_err(|e| Error::io(&path, e))?;
        Ok(ResultsLog { path, file })
    }

    pub fn append(&mut self, records: &[ResultRecord]) -> Result<()> {
        let mut buf = Vec::new();
        for r in records {
            serde_json::to_writer(&mut buf, r)?;
            buf.push(b'\n');
        }
        self.file.write_all(&buf).map_err(|e| Error::io(&self.path, e))?;
        self.file.flush().map_err(|e| Error::io(&self.path, e))
    }
}
