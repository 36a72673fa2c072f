use std::collections::BTreeMap;

use super::label::Label;

/// The label holding more than half of the votes, or UNKNOWN.
pub fn tally(votes: impl IntoIterator<Item = Label>) -> Label {
    let mut counts: BTreeMap<Label, usize> = BTreeMap::new();
    let mut n = 0;
    for v in votes {
        *counts.entry(v).or_default() += 1;
        n += 1;
    }
    counts
        .into_iter()
        .find(|&(_, c)| 2 * c > n)
        .map_or(Label::Unknown, |(l, _)| l)
}

/// Majority label with ties resolved to NONE.
pub fn majority_vote(votes: impl IntoIterator<Item = Label>) -> Label {
    match tally(votes) {
        Label::Unknown => Label::None,
        l => l,
    }
}
