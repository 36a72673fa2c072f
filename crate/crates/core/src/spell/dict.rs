use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Surface → count map used for spelling and segmentation checks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyDict {
    counts: HashMap<String, u64>,
    total: u64,
}

impl FrequencyDict {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `count` occurrences of `surface`. Zero counts are ignored.
    pub fn insert(&mut self, surface: &str, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry(surface.to_lowercase()).or_default() += count;
        self.total += count;
    }

    /// Parses `surface<TAB>count` lines. Repeated surfaces accumulate.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut dict = FrequencyDict::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected `surface<TAB>count`"))?;
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|e| Error::parse(origin, i + 1, format!("bad count: {e}")))?;
            if count == 0 {
                return Err(Error::parse(origin, i + 1, "counts must be >= 1"));
            }
            dict.insert(surface.trim(), count);
        }
        Ok(dict)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn count(&self, surface: &str) -> Option<u64> {
        self.counts.get(surface).copied()
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.counts.contains_key(surface)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

impl<S: AsRef<str>> FromIterator<(S, u64)> for FrequencyDict {
    fn from_iter<I: IntoIterator<Item = (S, u64)>>(iter: I) -> Self {
        let mut d = FrequencyDict::new();
        for (s, c) in iter {
            d.insert(s.as_ref(), c);
        }
        d
    }
}
