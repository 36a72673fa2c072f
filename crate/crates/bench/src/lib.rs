//! Inputs shared by the benchmarks. Everything is derived deterministically
//! from the bundled English seed list, so numbers are comparable across runs.

use neosift_core::spell::FrequencyDict;

const ENGLISH: &str = include_str!("../../core/data/lang/eng.txt");

pub fn english_words() -> Vec<&'static str> {
    ENGLISH
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::trim)
        .filter(|w| !w.is_empty() && w.bytes().all(|b| b.is_ascii_lowercase()))
        .collect()
}

/// Zipf-shaped counts over the seed list.
pub fn english_dict() -> FrequencyDict {
    english_words()
        .into_iter()
        .enumerate()
        .map(|(rank, w)| (w, 1_000_000 / (rank as u64 + 1) + 1))
        .collect()
}

/// Dictionary words with one character swapped, dropped or doubled, plus
/// the words themselves.
pub fn misspellings(n: usize) -> Vec<String> {
    let words = english_words();
    (0..n)
        .map(|i| {
            let w = words[(i * 7919) % words.len()];
            let mut b = w.as_bytes().to_vec();
            let at = i % b.len();
            match i % 4 {
                0 if b.len() > 1 => {
                    let j = at.min(b.len() - 2);
                    b.swap(j, j + 1);
                }
                1 if b.len() > 1 => {
                    b.remove(at);
                }
                2 => {
                    let c = b[at];
                    b.insert(at, c);
                }
                _ => {}
            }
            String::from_utf8(b).expect("ascii")
        })
        .collect()
}

/// Two dictionary words run together.
pub fn compounds(n: usize) -> Vec<String> {
    let words: Vec<&str> = english_words().into_iter().filter(|w| w.len() >= 3).collect();
    (0..n)
        .map(|i| {
            format!(
                "{}{}",
                words[(i * 31) % words.len()],
                words[(i * 17 + 5) % words.len()]
            )
        })
        .collect()
}

/// Reddit-like comment bodies with links, mentions and a coinage or two.
pub fn comments(n: usize) -> Vec<String> {
    let words = english_words();
    (0..n)
        .map(|i| {
            let mut s: Vec<String> = (0..12)
                .map(|j| words[(i * 13 + j * 101) % words.len()].to_string())
                .collect();
            if i % 3 == 0 {
                s.push("see https://example.com/thread?id=42".into());
            }
            if i % 5 == 0 {
                s.push("thanks u/someone, r/AskReddit loves a doomscroll".into());
            }
            s.join(" ")
        })
        .collect()
}
