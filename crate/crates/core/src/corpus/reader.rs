use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

/// One corpus document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Post {
    pub id: String,
    pub body: String,
    pub subreddit: String,
    pub created_utc: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusFormat {
    /// Pick by extension: `.zst` is zstd-compressed, anything else plain.
    #[default]
    Auto,
    Ndjson,
    NdjsonZstd,
}

impl std::str::FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "auto" => Ok(CorpusFormat::Auto),
            "ndjson" | "jsonl" => Ok(CorpusFormat::Ndjson),
            "ndjson.zst" | "zst" | "zstd" => Ok(CorpusFormat::NdjsonZstd),
            other => Err(format!("unknown corpus format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub lines: u64,
    pub yielded: u64,
    /// Deleted, removed, empty or non-textual records.
    pub skipped: u64,
    pub malformed: u64,
}

#[derive(Deserialize)]
struct RawRecord {
    #[serde(default)]
    id: Option<serde_json::Value>,
    #[serde(default)]
    body: Option<String>,
    #[serde(default)]
    selftext: Option<String>,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    subreddit: Option<String>,
    #[serde(default)]
    created_utc: Option<serde_json::Value>,
}

enum Parsed {
    Post(Post),
    Skip,
    Malformed(String),
}

fn is_removed(text: &str) -> bool {
    let t = text.trim();
    t.is_empty() || t == "[deleted]" || t == "[removed]"
}

fn parse_epoch(v: &serde_json::Value) -> Option<i64> {
    match v {
        serde_json::Value::Number(n) => n.as_i64().or_else(|| n.as_f64().map(|f| f as i64)),
        serde_json::Value::String(s) => s.trim().parse::<f64>().ok().map(|f| f as i64),
        _ => None,
    }
}

fn parse_record(line: &str) -> Parsed {
    let raw: RawRecord = match serde_json::from_str(line) {
        Ok(r) => r,
        Err(e) => return Parsed::Malformed(e.to_string()),
    };
    let Some(subreddit) = raw.subreddit.filter(|s| !s.trim().is_empty()) else {
        return Parsed::Malformed("missing subreddit".into());
    };
    let Some(created_utc) = raw.created_utc.as_ref().and_then(parse_epoch) else {
        return Parsed::Malformed("missing or invalid created_utc".into());
    };
    let id = match raw.id {
        Some(serde_json::Value::String(s)) => s,
        Some(other) => other.to_string(),
        None => String::new(),
    };

    let body = if let Some(body) = raw.body {
        // comment
        if is_removed(&body) {
            return Parsed::Skip;
        }
        body
    } else if raw.title.is_some() || raw.selftext.is_some() {
        // submission: title and self text are ingested as one document; link
        // posts without self text are non-textual and skipped.
        let selftext = raw.selftext.unwrap_or_default();
        if is_removed(&selftext) {
            return Parsed::Skip;
        }
        match raw.title.filter(|t| !is_removed(t)) {
            Some(title) => format!("{title}\n{selftext}"),
            None => selftext,
        }
    } else {
        return Parsed::Malformed("record has no text field".into());
    };

    Parsed::Post(Post {
        id,
        body,
        subreddit,
        created_utc,
    })
}

/// Streaming reader over a newline-delimited JSON corpus file.
pub struct PostReader {
    path: PathBuf,
    inner: Box<dyn BufRead + Send>,
    buf: Vec<u8>,
    stats: IngestStats,
}

impl PostReader {
    pub fn open(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let compressed = match format {
            CorpusFormat::Auto => path.extension().is_some_and(|ext| ext == "zst"),
            CorpusFormat::Ndjson => false,
            CorpusFormat::NdjsonZstd => true,
        };
        let inner: Box<dyn BufRead + Send> = if compressed {
            let decoder = zstd::Decoder::new(file).map_err(|e| Error::io(&path, e))?;
            Box::new(BufReader::with_capacity(1 << 20, decoder))
        } else {
            Box::new(BufReader::with_capacity(1 << 20, file))
        };
        Ok(PostReader {
            path,
            inner,
            buf: Vec::with_capacity(4096),
            stats: IngestStats::default(),
        })
    }

    /// Reads from an arbitrary uncompressed source; `label` names it in errors.
    pub fn from_reader(label: impl Into<PathBuf>, reader: impl Read + Send + 'static) -> Self {
        PostReader {
            path: label.into(),
            inner: Box::new(BufReader::new(reader)),
            buf: Vec::with_capacity(4096),
            stats: IngestStats::default(),
        }
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }
}

impl Iterator for PostReader {
    type Item = Result<Post>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.inner.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            }
            self.stats.lines += 1;
            let Ok(line) = std::str::from_utf8(&self.buf) else {
                self.stats.malformed += 1;
                log::warn!(
                    "{}:{}: invalid UTF-8, skipped",
                    self.path.display(),
                    self.stats.lines
                );
                continue;
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            match parse_record(line) {
                Parsed::Post(post) => {
                    self.stats.yielded += 1;
                    return Some(Ok(post));
                }
                Parsed::Skip => self.stats.skipped += 1,
                Parsed::Malformed(msg) => {
                    self.stats.malformed += 1;
                    log::warn!(
                        "{}:{}: malformed record: {msg}",
                        self.path.display(),
                        self.stats.lines
                    );
                }
            }
        }
    }
}

pub fn read_posts(path: impl AsRef<Path>, format: CorpusFormat) -> Result<PostReader> {
    PostReader::open(path, format)
}
