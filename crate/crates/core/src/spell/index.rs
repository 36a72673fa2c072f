use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::dict::FrequencyDict;
use super::distance::osa_within;
use super::SpellVerdict;
use crate::error::{Error, Result};

const SNAPSHOT_MAGIC: &[u8; 8] = b"NSDELIDX";
const SNAPSHOT_VERSION: u32 = 1;

/// Symmetric-delete index: every variant of every dictionary word obtained
/// by deleting up to `max_edit` characters maps back to the word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeleteIndex {
    max_edit: usize,
    words: Vec<String>,
    buckets: HashMap<String, Vec<u32>>,
}

/// All strings reachable from `word` by deleting at most `max` characters,
/// `word` itself included.
pub(crate) fn deletes(word: &str, max: usize) -> HashSet<String> {
    let mut out = HashSet::new();
    out.insert(word.to_string());
    let mut frontier = vec![word.to_string()];
    for _ in 0..max {
        let mut next = Vec::new();
        for w in &frontier {
            let chars: Vec<(usize, char)> = w.char_indices().collect();
            for &(i, c) in &chars {
                let mut v = String::with_capacity(w.len());
                v.push_str(&w[..i]);
                v.push_str(&w[i + c.len_utf8()..]);
                if out.insert(v.clone()) {
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    out
}

impl DeleteIndex {
    pub fn build(dict: &FrequencyDict, max_edit: usize) -> Self {
        let mut words: Vec<String> = dict.iter().map(|(w, _)| w.to_string()).collect();
        words.sort_unstable();
        let mut buckets: HashMap<String, Vec<u32>> = HashMap::new();
        for (id, w) in words.iter().enumerate() {
            for d in deletes(w, max_edit) {
                buckets.entry(d).or_default().push(id as u32);
            }
        }
        DeleteIndex {
            max_edit,
            words,
            buckets,
        }
    }

    pub fn max_edit(&self) -> usize {
        self.max_edit
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Dictionary words filed under the deletion variant `variant`.
    pub fn bucket(&self, variant: &str) -> impl Iterator<Item = &str> {
        self.buckets
            .get(variant)
            .into_iter()
            .flatten()
            .map(|&id| self.words[id as usize].as_str())
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    /// Dictionary words within `max_edit` of `query`, with their distances.
    pub fn candidates(&self, query: &str) -> Vec<(&str, usize)> {
        let mut seen: HashSet<u32> = HashSet::new();
        let mut out = Vec::new();
        for d in deletes(query, self.max_edit) {
            let Some(ids) = self.buckets.get(&d) else { continue };
            for &id in ids {
                if !seen.insert(id) {
                    continue;
                }
                let w = self.words[id as usize].as_str();
                if let Some(dist) = osa_within(query, w, self.max_edit) {
                    out.push((w, dist));
                }
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        w.write_all(SNAPSHOT_MAGIC).map_err(io)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(&(self.max_edit as u32).to_le_bytes()).map_err(io)?;
        w.write_all(&(self.words.len() as u64).to_le_bytes())
            .map_err(io)?;
        for word in &self.words {
            write_str(&mut w, word).map_err(io)?;
        }
        let mut keys: Vec<&String> = self.buckets.keys().collect();
        keys.sort_unstable();
        w.write_all(&(keys.len() as u64).to_le_bytes()).map_err(io)?;
        for k in keys {
            write_str(&mut w, k).map_err(io)?;
            let ids = &self.buckets[k];
            w.write_all(&(ids.len() as u32).to_le_bytes()).map_err(io)?;
            for id in ids {
                w.write_all(&id.to_le_bytes()).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let bad = |m: &str| Error::Checkpoint(format!("{}: {m}", path.display()));
        let mut r = BufReader::new(File::open(path).map_err(io)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(bad("not a delete-index snapshot"));
        }
        let version = read_u32(&mut r).map_err(io)?;
        if version != SNAPSHOT_VERSION {
            return Err(bad(&format!("unsupported snapshot version {version}")));
        }
        let max_edit = read_u32(&mut r).map_err(io)? as usize;
        let n_words = read_u64(&mut r).map_err(io)? as usize;
        let mut words = Vec::with_capacity(n_words);
        for _ in 0..n_words {
            words.push(read_str(&mut r).map_err(io)?);
        }
        let n_buckets = read_u64(&mut r).map_err(io)? as usize;
        let mut buckets = HashMap::with_capacity(n_buckets);
        for _ in 0..n_buckets {
            let key = read_str(&mut r).map_err(io)?;
            let n = read_u32(&mut r).map_err(io)? as usize;
            let mut ids = Vec::with_capacity(n);
            for _ in 0..n {
                let id = read_u32(&mut r).map_err(io)?;
                if id as usize >= words.len() {
                    return Err(bad("word id out of range"));
                }
                ids.push(id);
            }
            buckets.insert(key, ids);
        }
        Ok(DeleteIndex {
            max_edit,
            words,
            buckets,
        })
    }
}

fn write_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_str(r: &mut impl Read) -> std::io::Result<String> {
    let n = read_u32(r)? as usize;
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
}

/// Flags `surface` as a typo when a dictionary word with count above
/// `freq_floor` lies at OSA distance 1..=max_edit. The nearest such word
/// wins; ties go to the higher count, then the lexicographically smaller
/// word.
pub fn typo_check(
    surface: &str,
    index: &DeleteIndex,
    dict: &FrequencyDict,
    min_len: usize,
    freq_floor: u64,
) -> SpellVerdict {
    if surface.chars().count() < min_len {
        return SpellVerdict::Clean;
    }
    let mut best: Option<(usize, u64, &str)> = None;
    for (word, dist) in index.candidates(surface) {
        if dist == 0 {
            continue;
        }
        let count = dict.count(word).unwrap_or(0);
        if count <= freq_floor {
            continue;
        }
        let better = match best {
            None => true,
            Some((bd, bc, bw)) => (dist, std::cmp::Reverse(count), word) < (bd, std::cmp::Reverse(bc), bw),
        };
        if better {
            best = Some((dist, count, word));
        }
    }
    match best {
        Some((distance, _, word)) => SpellVerdict::Typo {
            correction: word.to_string(),
            distance,
        },
        None => SpellVerdict::Clean,
    }
}
