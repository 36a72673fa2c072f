//! Slow reference implementations, written without the library's helpers.

use std::collections::BTreeMap;

use neosift_core::spell::SpellVerdict;

/// Textbook optimal-string-alignment distance over bytes. Inputs are short,
/// so the table lives on the stack.
pub fn osa(a: &[u8], b: &[u8]) -> usize {
    const MAX: usize = 24;
    assert!(a.len() < MAX && b.len() < MAX, "oracle inputs are short words");
    let (n, m) = (a.len(), b.len());
    let mut d = [[0u8; MAX]; MAX];
    for (i, row) in d.iter_mut().enumerate().take(n + 1) {
        row[0] = i as u8;
    }
    for (j, cell) in d[0].iter_mut().enumerate().take(m + 1) {
        *cell = j as u8;
    }
    for i in 1..=n {
        for j in 1..=m {
            let cost = u8::from(a[i - 1] != b[j - 1]);
            let mut v = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                v = v.min(d[i - 2][j - 2] + 1);
            }
            d[i][j] = v;
        }
    }
    d[n][m] as usize
}

/// Letter histogram folded into 16 classes.
fn histogram(w: &[u8]) -> [i8; 16] {
    let mut h = [0i8; 16];
    for &c in w {
        h[(c & 15) as usize] += 1;
    }
    h
}

/// Letters one side has beyond the other, counted per class. Folding
/// letters together only lowers it, and no edit sequence shorter than it
/// turns one word into the other.
fn bag_distance(a: &[i8; 16], b: &[i8; 16]) -> usize {
    let (mut extra, mut missing) = (0i32, 0i32);
    for i in 0..16 {
        let v = (a[i] - b[i]) as i32;
        if v > 0 {
            extra += v;
        } else {
            missing -= v;
        }
    }
    extra.max(missing) as usize
}

/// A dictionary prepared for repeated full scans.
pub struct TypoScan<'a> {
    words: Vec<(&'a str, u64, [i8; 16])>,
}

impl<'a> TypoScan<'a> {
    pub fn new(dict: &[(&'a str, u64)]) -> Self {
        TypoScan {
            words: dict
                .iter()
                .map(|&(w, c)| (w, c, histogram(w.as_bytes())))
                .collect(),
        }
    }

    /// Every dictionary word, nearest first, then most frequent, then
    /// alphabetical. Words at distance 0 or with counts at or below the
    /// floor never qualify.
    pub fn check(&self, query: &str, max_edit: usize, min_len: usize, floor: u64) -> SpellVerdict {
        if query.chars().count() < min_len {
            return SpellVerdict::Clean;
        }
        let q = query.as_bytes();
        let qh = histogram(q);
        let mut best: Option<(usize, u64, &str)> = None;
        for &(w, c, ref wh) in &self.words {
            // both bounds hold for OSA, so skipping is exact
            if c <= floor || w.len().abs_diff(q.len()) > max_edit || bag_distance(&qh, wh) > max_edit {
                continue;
            }
            let d = osa(q, w.as_bytes());
            if d == 0 || d > max_edit {
                continue;
            }
            let wins = match best {
                None => true,
                Some((bd, bc, bw)) => d < bd || (d == bd && (c > bc || (c == bc && w < bw))),
            };
            if wins {
                best = Some((d, c, w));
            }
        }
        match best {
            Some((distance, _, w)) => SpellVerdict::Typo {
                correction: w.to_string(),
                distance,
            },
            None => SpellVerdict::Clean,
        }
    }
}

/// Tries all 2^(n-1) ways of cutting `token` and keeps the one with the
/// fewest parts, then the largest count product, then the earliest cuts.
pub fn segment_scan(
    token: &str,
    dict: &BTreeMap<String, u64>,
    min_len: usize,
    min_part: usize,
) -> SpellVerdict {
    let n = token.len();
    if n < min_len {
        return SpellVerdict::Clean;
    }
    let mut best: Option<(usize, u128, Vec<usize>)> = None;
    for mask in 0..1u32 << (n - 1) {
        if mask == 0 {
            continue;
        }
        let mut ends: Vec<usize> = (1..n).filter(|i| mask >> (i - 1) & 1 == 1).collect();
        ends.push(n);
        let mut start = 0;
        let mut product: u128 = 1;
        let mut ok = true;
        for &e in &ends {
            let part = &token[start..e];
            match dict.get(part) {
                Some(&c) if part.len() >= min_part => product *= c as u128,
                _ => {
                    ok = false;
                    break;
                }
            }
            start = e;
        }
        if !ok {
            continue;
        }
        let wins = match &best {
            None => true,
            Some((bp, bs, be)) => {
                ends.len() < *bp || (ends.len() == *bp && (product > *bs || (product == *bs && ends < *be)))
            }
        };
        if wins {
            best = Some((ends.len(), product, ends));
        }
    }
    match best {
        Some((_, _, ends)) => {
            let mut start = 0;
            SpellVerdict::Concat {
                segments: ends
                    .into_iter()
                    .map(|e| {
                        let p = token[start..e].to_string();
                        start = e;
                        p
                    })
                    .collect(),
            }
        }
        None => SpellVerdict::Clean,
    }
}
