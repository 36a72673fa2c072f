use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};

use super::{LangVerdict, LanguageDetector};

macro_rules! seeds {
    ($($code:literal),* $(,)?) => {
        /// Languages with a bundled seed word list.
        pub const SEED_LANGUAGES: &[&str] = &[$($code),*];

        fn seed_text(code: &str) -> Option<&'static str> {
            match code {
                $($code => Some(include_str!(concat!("../../data/lang/", $code, ".txt"))),)*
                _ => None,
            }
        }
    };
}

seeds!(
    "cat", "ces", "dan", "deu", "eng", "fin", "fra", "hrv", "hun", "ind", "ita", "nld", "nob", "pol", "por",
    "ron", "spa", "swe", "tgl", "tur",
);

const PROFILE_HEADER: &str = "# neosift trigram profile v1 lang=";
const SEED_HEADER: &str = "# neosift seed words v1 lang=";

fn padded_trigrams(word: &str) -> impl Iterator<Item = String> {
    let chars: Vec<char> = std::iter::once('^')
        .chain(word.chars())
        .chain(std::iter::once('$'))
        .collect();
    (0..chars.len().saturating_sub(2)).map(move |i| chars[i..i + 3].iter().collect())
}

/// Character-trigram counts for one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LangProfile {
    pub code: String,
    counts: BTreeMap<String, u64>,
}

impl LangProfile {
    /// Counts the padded trigrams of every word. Words with non-ASCII letters
    /// also contribute their ASCII-only form, since corpus text is reduced to
    /// ASCII before tokenization.
    pub fn from_words<'a>(code: &str, words: impl IntoIterator<Item = &'a str>) -> Self {
        let mut counts = BTreeMap::new();
        for word in words {
            let word = word.trim().to_lowercase();
            if word.is_empty() {
                continue;
            }
            let ascii: String = word.chars().filter(char::is_ascii).collect();
            let mut forms = vec![word.as_str()];
            if ascii != word && !ascii.is_empty() {
                forms.push(&ascii);
            }
            for form in forms {
                for tri in padded_trigrams(form) {
                    *counts.entry(tri).or_default() += 1;
                }
            }
        }
        LangProfile {
            code: code.to_string(),
            counts,
        }
    }

    /// Builds a profile from a seed list: one word per line, `#` comments.
    pub fn from_seed_list(code: &str, text: &str) -> Result<Self> {
        if let Some(first) = text.lines().next() {
            if let Some(declared) = first.strip_prefix(SEED_HEADER) {
                if declared.trim() != code {
                    return Err(Error::Config(format!(
                        "seed list declares `{}` but was loaded as `{code}`",
                        declared.trim()
                    )));
                }
            }
        }
        let words = text.lines().filter(|l| !l.starts_with('#'));
        Ok(Self::from_words(code, words))
    }

    pub fn builtin(code: &str) -> Option<Self> {
        seed_text(code).map(|t| Self::from_seed_list(code, t).expect("bundled seed list"))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn count(&self, trigram: &str) -> u64 {
        self.counts.get(trigram).copied().unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{PROFILE_HEADER}{}\n", self.code);
        for (tri, c) in &self.counts {
            out.push_str(tri);
            out.push('\t');
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines();
        let code = lines
            .next()
            .and_then(|h| h.strip_prefix(PROFILE_HEADER))
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .ok_or_else(|| Error::parse(origin, 1, "missing trigram profile header"))?
            .to_string();
        let mut counts = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (tri, c) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, i + 2, "expected `trigram<TAB>count`"))?;
            if tri.chars().count() != 3 {
                return Err(Error::parse(origin, i + 2, format!("`{tri}` is not a trigram")));
            }
            let c: u64 = c
                .parse()
                .map_err(|e| Error::parse(origin, i + 2, format!("bad count: {e}")))?;
            counts.insert(tri.to_string(), c);
        }
        Ok(LangProfile { code, counts })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

struct Model {
    code: String,
    log_probs: HashMap<String, f64>,
    unseen: f64,
}

/// Trigram log-likelihood classifier over a fixed language inventory.
///
/// Each language scores the sum of its add-one smoothed trigram
/// log-probabilities; the scores go through a softmax and the confidence is
/// the gap between the two most probable languages.
pub struct NgramDetector {
    target: String,
    models: Vec<Model>,
}

impl NgramDetector {
    pub fn from_profiles(profiles: Vec<LangProfile>, target: &str) -> Result<Self> {
        if !profiles.iter().any(|p| p.code == target) {
            return Err(Error::Config(format!(
                "no language profile for target language `{target}`"
            )));
        }
        let mut seen = HashSet::new();
        for p in &profiles {
            if !seen.insert(p.code.as_str()) {
                return Err(Error::Config(format!("duplicate language profile `{}`", p.code)));
            }
        }
        let vocab: HashSet<&str> = profiles
            .iter()
            .flat_map(|p| p.counts.keys().map(String::as_str))
            .collect();
        let vocab = vocab.len() as f64;
        let mut models: Vec<Model> = profiles
            .iter()
            .map(|p| {
                let denom = (p.total() as f64 + vocab).ln();
                Model {
                    code: p.code.clone(),
                    log_probs: p
                        .counts
                        .iter()
                        .map(|(t, &c)| (t.clone(), (c as f64 + 1.0).ln() - denom))
                        .collect(),
                    unseen: -denom,
                }
            })
            .collect();
        models.sort_by(|a, b| a.code.cmp(&b.code));
        Ok(NgramDetector {
            target: target.to_string(),
            models,
        })
    }

    /// Profiles for every inventory language with a bundled seed list.
    /// Languages without one are skipped with a warning.
    pub fn builtin(inventory: &[impl AsRef<str>], target: &str) -> Result<Self> {
        let mut profiles = Vec::new();
        for code in inventory {
            let code = code.as_ref();
            match LangProfile::builtin(code) {
                Some(p) => profiles.push(p),
                None => log::warn!("no bundled trigram profile for `{code}`; skipping it"),
            }
        }
        Self::from_profiles(profiles, target)
    }

    /// Loads `<code>.tri` profile files from `dir` for each inventory code,
    /// falling back to the bundled seed list when a file is absent.
    pub fn from_dir(dir: &Path, inventory: &[impl AsRef<str>], target: &str) -> Result<Self> {
        let mut profiles = Vec::new();
        for code in inventory {
            let code = code.as_ref();
            let path = dir.join(format!("{code}.tri"));
            if path.exists() {
                profiles.push(LangProfile::load(&path)?);
            } else if let Some(p) = LangProfile::builtin(code) {
                profiles.push(p);
            } else {
                log::warn!(
                    "no trigram profile for `{code}` in {}; skipping it",
                    dir.display()
                );
            }
        }
        Self::from_profiles(profiles, target)
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.models.iter().map(|m| m.code.as_str())
    }

    /// Per-language log-likelihood of `surface`, in code order.
    pub fn scores(&self, surface: &str) -> Vec<(&str, f64)> {
        let tris: Vec<String> = padded_trigrams(surface).collect();
        self.models
            .iter()
            .map(|m| {
                let s = tris
                    .iter()
                    .map(|t| m.log_probs.get(t).copied().unwrap_or(m.unseen))
                    .sum();
                (m.code.as_str(), s)
            })
            .collect()
    }
}

impl LanguageDetector for NgramDetector {
    fn target(&self) -> &str {
        &self.target
    }

    fn detect(&self, surface: &str) -> LangVerdict {
        if surface.chars().count() < 3 || self.models.len() < 2 {
            return LangVerdict {
                language: self.target.clone(),
                confidence: 0.0,
            };
        }
        let scores = self.scores(surface);
        let max = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = scores.iter().map(|s| (s.1 - max).exp()).collect();
        let z: f64 = weights.iter().sum();
        let mut ranked: Vec<(&str, f64)> = scores.iter().zip(&weights).map(|(s, w)| (s.0, w / z)).collect();
        // ties favour the target, then code order
        let target = self.target.as_str();
        ranked.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| (b.0 == target).cmp(&(a.0 == target)))
                .then_with(|| a.0.cmp(b.0))
        });
        LangVerdict {
            language: ranked[0].0.to_string(),
            confidence: (ranked[0].1 - ranked[1].1).clamp(0.0, 1.0),
        }
    }
}
