//! Typo and concatenation detection against a frequency dictionary.
//!
//! Typos are found with a symmetric-delete index verified by
//! optimal-string-alignment distance; concatenations by dynamic-programming
//! segmentation into dictionary words. Neither removes anything: verdicts set
//! flags that the frequency gate later reads.

mod dict;
mod distance;
mod index;
mod segment;

use serde::{Deserialize, Serialize};

pub use dict::FrequencyDict;
pub use distance::{osa_distance, osa_within};
pub use index::{typo_check, DeleteIndex};
pub use segment::segment;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum SpellVerdict {
    Clean,
    Typo { correction: String, distance: usize },
    Concat { segments: Vec<String> },
}

impl SpellVerdict {
    pub fn is_clean(&self) -> bool {
        matches!(self, SpellVerdict::Clean)
    }
}
