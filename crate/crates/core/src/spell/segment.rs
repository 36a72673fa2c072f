use std::cmp::Ordering;

use super::dict::FrequencyDict;
use super::SpellVerdict;

/// Product of part counts, exact while it fits in a u128.
#[derive(Debug, Clone, Copy)]
struct Score {
    exact: Option<u128>,
    log: f64,
}

impl Score {
    const ONE: Score = Score {
        exact: Some(1),
        log: 0.0,
    };

    fn times(self, count: u64) -> Score {
        Score {
            exact: self.exact.and_then(|e| e.checked_mul(count as u128)),
            log: self.log + (count as f64).ln(),
        }
    }

    fn cmp(&self, other: &Score) -> Ordering {
        match (self.exact, other.exact) {
            (Some(a), Some(b)) => a.cmp(&b),
            _ => self.log.total_cmp(&other.log),
        }
    }
}

#[derive(Debug, Clone)]
struct Best {
    parts: usize,
    score: Score,
    /// End offset of every part so far.
    ends: Vec<usize>,
}

impl Best {
    /// Fewer parts first, then the larger count product (equivalent to the
    /// larger product of relative frequencies for equal part counts), then
    /// earlier split points.
    fn better_than(&self, other: &Best) -> bool {
        self.parts
            .cmp(&other.parts)
            .then_with(|| other.score.cmp(&self.score))
            .then_with(|| self.ends.cmp(&other.ends))
            == Ordering::Less
    }
}

/// Splits `surface` into two or more dictionary words of at least
/// `min_part` characters each. Among valid segmentations the one with the
/// fewest parts wins; ties go to the largest product of relative frequencies,
/// then to the earliest split points.
pub fn segment(surface: &str, dict: &FrequencyDict, min_len: usize, min_part: usize) -> SpellVerdict {
    let bounds: Vec<usize> = surface
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(surface.len()))
        .collect();
    let n = bounds.len() - 1;
    if n < min_len || n < 2 * min_part.max(1) {
        return SpellVerdict::Clean;
    }
    let min_part = min_part.max(1);

    let mut best: Vec<Option<Best>> = vec![None; n + 1];
    best[0] = Some(Best {
        parts: 0,
        score: Score::ONE,
        ends: Vec::new(),
    });
    for end in min_part..=n {
        // the final part may not span the whole token
        let first_start = if end == n { min_part } else { 0 };
        let mut slot: Option<Best> = None;
        for start in first_start..=end - min_part {
            let Some(prefix) = &best[start] else { continue };
            let Some(count) = dict.count(&surface[bounds[start]..bounds[end]]) else {
                continue;
            };
            let mut ends = prefix.ends.clone();
            ends.push(end);
            let cand = Best {
                parts: prefix.parts + 1,
                score: prefix.score.times(count),
                ends,
            };
            if slot.as_ref().is_none_or(|s| cand.better_than(s)) {
                slot = Some(cand);
            }
        }
        best[end] = slot;
    }

    match best[n].take() {
        Some(b) if b.parts >= 2 => {
            let mut start = 0;
            let segments = b
                .ends
                .iter()
                .map(|&e| {
                    let part = surface[bounds[start]..bounds[e]].to_string();
                    start = e;
                    part
                })
                .collect();
            SpellVerdict::Concat { segments }
        }
        _ => SpellVerdict::Clean,
    }
}
