//! Reference-vocabulary exclusion.
//!
//! Every surface attested in a pre-cutoff lexicon is treated as established
//! vocabulary. Matching is exact and type-level: no stemming and no sense
//! disambiguation, so a homograph in any source blocks the token.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceInfo {
    pub name: String,
    pub path: PathBuf,
    pub cutoff: Option<NaiveDate>,
    /// Distinct entries contributed by this file before the union.
    pub entries: usize,
}

/// Union of reference lexicons.
#[derive(Debug, Clone, Default)]
pub struct VocabularySet {
    entries: HashSet<String>,
    sources: Vec<SourceInfo>,
}

/// One row of a vocabulary manifest: `name \t path \t cutoff(YYYY-MM-DD)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub name: String,
    pub path: PathBuf,
    pub cutoff: Option<NaiveDate>,
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() < 2 {
            return Err(Error::parse(path, i + 1, "expected `name<TAB>path[<TAB>cutoff]`"));
        }
        let cutoff = match cols.get(2) {
            Some(d) if !d.is_empty() => Some(
                NaiveDate::parse_from_str(d, "%Y-%m-%d")
                    .map_err(|e| Error::parse(path, i + 1, format!("bad cutoff `{d}`: {e}")))?,
            ),
            _ => None,
        };
        let p = Path::new(cols[1]);
        out.push(ManifestEntry {
            name: cols[0].to_string(),
            path: if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            },
            cutoff,
        });
    }
    Ok(out)
}

fn read_source(path: &Path, into: &mut HashSet<String>) -> Result<usize> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut buf = Vec::new();
    let mut local = HashSet::new();
    let mut lineno = 0usize;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        lineno += 1;
        let Ok(line) = std::str::from_utf8(&buf) else {
            log::warn!("{}:{lineno}: not UTF-8, skipped", path.display());
            continue;
        };
        let line = line.trim();
        // multi-word entries cannot match a single token
        if line.is_empty() || line.contains(char::is_whitespace) {
            continue;
        }
        local.insert(line.to_lowercase());
    }
    let n = local.len();
    into.extend(local);
    Ok(n)
}

impl VocabularySet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads and unions one-token-per-line files; each source is named after
    /// its file stem.
    pub fn load(paths: &[impl AsRef<Path>]) -> Result<Self> {
        let entries: Vec<ManifestEntry> = paths
            .iter()
            .map(|p| {
                let p = p.as_ref();
                ManifestEntry {
                    name: p
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default(),
                    path: p.to_path_buf(),
                    cutoff: None,
                }
            })
            .collect();
        Self::load_manifest_entries(&entries)
    }

    pub fn load_manifest(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_manifest_entries(&read_manifest(path)?)
    }

    pub fn load_manifest_entries(entries: &[ManifestEntry]) -> Result<Self> {
        let mut vocab = VocabularySet::new();
        for e in entries {
            let n = read_source(&e.path, &mut vocab.entries)?;
            log::info!("vocabulary source {}: {n} entries", e.name);
            vocab.sources.push(SourceInfo {
                name: e.name.clone(),
                path: e.path.clone(),
                cutoff: e.cutoff,
                entries: n,
            });
        }
        Ok(vocab)
    }

    pub fn insert(&mut self, surface: &str) {
        self.entries.insert(surface.to_lowercase());
    }

    pub fn is_known(&self, surface: &str) -> bool {
        self.entries.contains(surface)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sources(&self) -> &[SourceInfo] {
        &self.sources
    }

    /// Latest cutoff across sources; entries from every source predate it.
    pub fn cutoff(&self) -> Option<NaiveDate> {
        self.sources.iter().filter_map(|s| s.cutoff).max()
    }
}

impl<S: AsRef<str>> FromIterator<S> for VocabularySet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        VocabularySet {
            entries: iter.into_iter().map(|s| s.as_ref().to_lowercase()).collect(),
            sources: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, lines: &[&str]) -> PathBuf {
        let p = dir.join(name);
        let mut f = File::create(&p).unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        p
    }

    #[test]
    fn union_lowercases_and_dedups() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(dir.path(), "a.txt", &["Dog", "cat"]);
        let b = write(dir.path(), "b.txt", &["cat", "sun"]);
        let v = VocabularySet::load(&[a, b]).unwrap();
        assert_eq!(v.len(), 3);
        for w in ["dog", "cat", "sun"] {
            assert!(v.is_known(w));
        }
        assert_eq!(v.sources()[0].entries, 2);
        assert_eq!(v.sources()[1].entries, 2);
    }

    #[test]
    fn empty_file_list() {
        let v = VocabularySet::load(&[] as &[PathBuf]).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn missing_file_is_fatal() {
        assert!(matches!(
            VocabularySet::load(&["/nope/missing.txt"]),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn bad_utf8_lines_and_multiword_lines_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        std::fs::write(&p, b"good\n\xff\xfe\nnew york\nkaren\n").unwrap();
        let v = VocabularySet::load(&[p]).unwrap();
        assert_eq!(v.len(), 2);
        assert!(v.is_known("karen"));
        assert!(!v.is_known("new york"));
    }

    #[test]
    fn known_homographs_block_tokens() {
        // a pre-existing sense in any source is enough to exclude the token
        let v: VocabularySet = ["karen", "doggo"].into_iter().collect();
        assert!(v.is_known("karen"));
        assert!(v.is_known("doggo"));
        assert!(!v.is_known("updoot"));
    }

    #[test]
    fn manifest_resolves_relative_paths_and_cutoffs() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "wn.txt", &["tree"]);
        let m = dir.path().join("vocab.tsv");
        std::fs::write(&m, "# name path cutoff\nwordnet\twn.txt\t2014-12-31\n").unwrap();
        let v = VocabularySet::load_manifest(&m).unwrap();
        assert!(v.is_known("tree"));
        assert_eq!(v.cutoff(), NaiveDate::from_ymd_opt(2014, 12, 31));
    }

    proptest! {
        #[test]
        fn survivors_are_exact_set_difference(
            types in prop::collection::btree_set("[a-d]{1,3}", 0..30),
            known in prop::collection::vec("[a-d]{1,3}", 0..30),
            extra in prop::collection::vec("[a-d]{1,3}", 0..10),
        ) {
            let v: VocabularySet = known.iter().collect();
            let survivors: Vec<&String> = types.iter().filter(|t| !v.is_known(t)).collect();
            let brute: Vec<&String> = types.iter().filter(|t| !known.contains(t)).collect();
            prop_assert_eq!(&survivors, &brute);

            // idempotent
            let again: Vec<&String> = survivors.iter().copied().filter(|t| !v.is_known(t)).collect();
            prop_assert_eq!(&again, &survivors);

            // more sources never add survivors
            let bigger: VocabularySet = known.iter().chain(extra.iter()).collect();
            let fewer = types.iter().filter(|t| !bigger.is_known(t)).count();
            prop_assert!(fewer <= survivors.len());
        }
    }
}
