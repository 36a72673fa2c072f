use std::collections::{BTreeMap, HashMap};

use super::label::Label;

/// Reads `surface:LABEL` lines. Every expected surface maps to its label, or
/// to `None` (a parse failure) when its line is missing, malformed or
/// contradicted by another line. Surfaces and labels match case-insensitively;
/// whitespace around either is ignored. Lines for unexpected surfaces are
/// ignored.
pub fn parse_response(text: &str, expected: &[impl AsRef<str>]) -> BTreeMap<String, Option<Label>> {
    let wanted: HashMap<String, &str> = expected
        .iter()
        .map(|s| (s.as_ref().to_lowercase(), s.as_ref()))
        .collect();
    let mut found: HashMap<&str, Option<Label>> = HashMap::new();
    for line in text.lines() {
        let Some((surface, label)) = line.trim().rsplit_once(':') else {
            continue;
        };
        let Some(&key) = wanted.get(&surface.trim().to_lowercase()) else {
            continue;
        };
        let label = Label::parse_answer(label.trim());
        match found.get(key) {
            None => {
                found.insert(key, label);
            }
            Some(prev) if *prev != label => {
                found.insert(key, None);
            }
            Some(_) => {}
        }
    }
    expected
        .iter()
        .map(|s| {
            let s = s.as_ref();
            (s.to_string(), found.get(s).copied().flatten())
        })
        .collect()
}
