//! Deterministic synthetic corpus with planted token families.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use neosift_core::pattern::{PatternDecision, PatternRuleSet};
use neosift_core::pipeline::PipelineConfig;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ENGLISH: &str = include_str!("../../data/lang/eng.txt");
const FOREIGN: &[&str] = &[
    include_str!("../../data/lang/deu.txt"),
    include_str!("../../data/lang/spa.txt"),
    include_str!("../../data/lang/fra.txt"),
    include_str!("../../data/lang/pol.txt"),
    include_str!("../../data/lang/fin.txt"),
    include_str!("../../data/lang/tur.txt"),
];

const SUBREDDITS: usize = 40;

#[derive(Debug, Clone)]
pub struct Planted {
    pub neologisms: Vec<(String, u64)>,
    pub typos: Vec<(String, u64)>,
    pub concats: Vec<(String, u64)>,
    pub foreign: Vec<(String, u64)>,
    pub spam: Vec<(String, u64)>,
}

#[derive(Debug, Clone)]
pub struct SeededCorpus {
    pub dir: PathBuf,
    pub config_path: PathBuf,
    pub posts: usize,
    pub planted: Planted,
}

impl SeededCorpus {
    pub fn config(&self) -> PipelineConfig {
        PipelineConfig::from_file(&self.config_path).expect("seeded config loads")
    }
}

fn words(list: &str) -> Vec<&str> {
    list.lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::trim)
        .filter(|w| w.len() >= 2 && w.bytes().all(|b| b.is_ascii_lowercase()))
        .collect()
}

fn passes(rules: &PatternRuleSet, s: &str) -> bool {
    rules.check(s) == PatternDecision::Pass
}

fn mutate(rng: &mut ChaCha8Rng, word: &str, edits: usize) -> String {
    let mut w: Vec<u8> = word.bytes().collect();
    for _ in 0..edits {
        let i = rng.gen_range(0..w.len());
        let c = rng.gen_range(b'a'..=b'z');
        match rng.gen_range(0..4) {
            0 => w[i] = c,
            1 if w.len() > 5 => {
                w.remove(i);
            }
            2 if i + 1 < w.len() => w.swap(i, i + 1),
            _ => w.insert(i, c),
        }
    }
    String::from_utf8(w).expect("ascii")
}

/// Builds the corpus, vocabulary, frequency dictionary, mock label tables and
/// a config file under `dir`.
pub fn build(dir: &Path, posts: usize, seed: u64) -> SeededCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rules = PatternRuleSet::english();
    let english = words(ENGLISH);
    let vocab: HashSet<&str> = english.iter().copied().collect();
    let mut taken: HashSet<String> = HashSet::new();
    let fresh = |s: &str, taken: &mut HashSet<String>| !vocab.contains(s) && taken.insert(s.to_string());

    let long: Vec<&str> = english.iter().copied().filter(|w| w.len() >= 5).collect();
    let mut neologisms = Vec::new();
    while neologisms.len() < 50 {
        let a = long.choose(&mut rng).unwrap();
        let b = long.choose(&mut rng).unwrap();
        let head = &a[..rng.gen_range(3..=a.len().min(5))];
        let tail = &b[b.len() - rng.gen_range(3..=b.len().min(5))..];
        let s = format!("{head}{tail}");
        if s.len() >= 6 && passes(&rules, &s) && fresh(&s, &mut taken) {
            neologisms.push((s, rng.gen_range(120..400)));
        }
    }

    let mut typos = Vec::new();
    while typos.len() < 500 {
        let w = long.choose(&mut rng).unwrap();
        let edits = rng.gen_range(1..=2);
        let s = mutate(&mut rng, w, edits);
        if s != *w && fresh(&s, &mut taken) {
            typos.push((s, rng.gen_range(1..60)));
        }
    }

    let parts: Vec<&str> = english.iter().copied().filter(|w| w.len() >= 3).collect();
    let mut concats = Vec::new();
    while concats.len() < 200 {
        let a = parts.choose(&mut rng).unwrap();
        let b = parts.choose(&mut rng).unwrap();
        let s = format!("{a}{b}");
        if s.len() >= 6 && s.len() <= 20 && passes(&rules, &s) && fresh(&s, &mut taken) {
            let count = if concats.len() < 100 {
                rng.gen_range(100..250)
            } else {
                rng.gen_range(2..60)
            };
            concats.push((s, count));
        }
    }

    let mut foreign = Vec::new();
    let pools: Vec<Vec<&str>> = FOREIGN
        .iter()
        .map(|l| words(l).into_iter().filter(|w| w.len() >= 8).collect())
        .collect();
    while foreign.len() < 100 {
        let pool = &pools[foreign.len() % pools.len()];
        let s = pool.choose(&mut rng).unwrap();
        if passes(&rules, s) && fresh(s, &mut taken) {
            foreign.push((s.to_string(), rng.gen_range(100..200)));
        }
    }

    let mut spam = Vec::new();
    while spam.len() < 1000 {
        let letter = |rng: &mut ChaCha8Rng| rng.gen_range(b'a'..=b'z') as char;
        let s: String = match spam.len() % 4 {
            // a letter held down
            0 => {
                let c = letter(&mut rng);
                let run: String = std::iter::repeat_n(c, rng.gen_range(4..9)).collect();
                format!("{}{run}{}", letter(&mut rng), letter(&mut rng))
            }
            // two keys alternating
            1 => {
                let (a, b) = (letter(&mut rng), letter(&mut rng));
                (0..rng.gen_range(7..14))
                    .map(|i| if i % 2 == 0 { a } else { b })
                    .collect()
            }
            // a repeated syllable
            2 => {
                let syl: String = (0..2).map(|_| letter(&mut rng)).collect();
                syl.repeat(rng.gen_range(3..6)) + &letter(&mut rng).to_string()
            }
            // face on the keyboard
            _ => (0..rng.gen_range(21..32)).map(|_| letter(&mut rng)).collect(),
        };
        if fresh(&s, &mut taken) {
            spam.push((s, rng.gen_range(1..6)));
        }
    }

    // one insertion per occurrence, spread over posts
    let mut inserts: Vec<Vec<&str>> = vec![Vec::new(); posts];
    for list in [&neologisms, &typos, &concats, &foreign, &spam] {
        for (s, n) in list.iter() {
            for _ in 0..*n {
                inserts[rng.gen_range(0..posts)].push(s.as_str());
            }
        }
    }

    // Zipf-ish filler over the vocabulary
    let weights: Vec<f64> = (0..english.len()).map(|r| 1.0 / (r as f64 + 10.0)).collect();
    let filler = rand::distributions::WeightedIndex::new(&weights).unwrap();

    fs::create_dir_all(dir).unwrap();
    let mut corpus = String::with_capacity(posts * 90);
    for (i, extra) in inserts.iter().enumerate() {
        let n = rng.gen_range(6..12);
        let mut body: Vec<&str> = (0..n).map(|_| english[rng.sample(&filler)]).collect();
        for s in extra {
            let at = rng.gen_range(0..=body.len());
            body.insert(at, s);
        }
        let mut text = body.join(" ");
        if i % 97 == 0 {
            text.push_str(". See https://example.com/x?y=1 and r/test!");
        }
        let sub = format!("sub{:02}", (i * 7 + rng.gen_range(0..SUBREDDITS)) % SUBREDDITS);
        let rec = serde_json::json!({"id": format!("p{i}"), "body": text, "subreddit": sub, "created_utc": 1_500_000_000 + i as i64});
        corpus.push_str(&rec.to_string());
        corpus.push('\n');
        if i % 5000 == 0 {
            corpus.push_str(
                "{\"id\":\"gone\",\"body\":\"[deleted]\",\"subreddit\":\"sub00\",\"created_utc\":1}\n",
            );
            corpus.push_str("{not json\n");
        }
    }
    fs::write(dir.join("corpus.ndjson"), corpus).unwrap();

    let mut vocab_file = String::new();
    for w in &english {
        vocab_file.push_str(w);
        vocab_file.push('\n');
    }
    fs::create_dir_all(dir.join("vocab")).unwrap();
    fs::write(dir.join("vocab/wordlist.txt"), vocab_file).unwrap();
    fs::write(
        dir.join("vocab.manifest"),
        "wordlist\tvocab/wordlist.txt\t2014-12-31\n",
    )
    .unwrap();

    let mut dict = String::new();
    for (r, w) in english.iter().enumerate() {
        let _ = writeln!(dict, "{w}\t{}", 1_000_000 / (r as u64 + 1) + 101);
    }
    fs::write(dir.join("freq.tsv"), dict).unwrap();

    let mut labels = BTreeMap::new();
    for (s, _) in &neologisms {
        labels.insert(s.as_str(), "NEOLOGISM");
    }
    for (s, _) in &foreign {
        labels.insert(s.as_str(), "FOREIGN");
    }
    let table: String = labels.iter().map(|(s, l)| format!("{s}\t{l}\n")).collect();
    fs::write(dir.join("labels.tsv"), &table).unwrap();
    let confirm: String = neologisms
        .iter()
        .map(|(s, _)| format!("{s}\tNEOLOGISM\n"))
        .collect();
    fs::write(dir.join("verifier.tsv"), confirm).unwrap();

    let config = "\
corpus = corpus.ndjson
work_dir = work
vocab_manifest = vocab.manifest
freq_dict = freq.tsv
voter_endpoints = alpha, beta, gamma
verifier_endpoint = judge
endpoint.alpha.provider = mock
endpoint.alpha.mock_labels = labels.tsv
endpoint.alpha.mock_default = none
endpoint.beta.provider = mock
endpoint.beta.mock_labels = labels.tsv
endpoint.beta.mock_default = none
endpoint.gamma.provider = mock
endpoint.gamma.mock_labels = labels.tsv
endpoint.gamma.mock_default = entity
endpoint.judge.provider = mock
endpoint.judge.role = verifier
endpoint.judge.mock_labels = verifier.tsv
endpoint.judge.mock_default = none
";
    let config_path = dir.join("neosift.conf");
    fs::write(&config_path, config).unwrap();

    SeededCorpus {
        dir: dir.to_path_buf(),
        config_path,
        posts,
        planted: Planted {
            neologisms,
            typos,
            concats,
            foreign,
            spam,
        },
    }
}

/// Surfaces of a TSV snapshot, read independently of the library's parser.
pub fn surfaces(path: &Path) -> BTreeSet<String> {
    fs::read_to_string(path)
        .unwrap_or_default()
        .lines()
        .skip(1)
        .filter_map(|l| l.split('\t').next())
        .map(str::to_string)
        .collect()
}

/// `surface → trace` column of a TSV snapshot.
pub fn traces(path: &Path) -> BTreeMap<String, String> {
    fs::read_to_string(path)
        .unwrap_or_default()
        .lines()
        .skip(1)
        .filter_map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            Some((cols.first()?.to_string(), cols.get(4)?.to_string()))
        })
        .collect()
}
