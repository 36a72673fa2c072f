use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Entity,
    Neologism,
    Foreign,
    None,
    /// Vote-tie marker. Never a final label.
    Unknown,
}

impl Label {
    /// Labels a model may answer with.
    pub const ANSWERS: [Label; 4] = [Label::Entity, Label::Neologism, Label::Foreign, Label::None];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entity => "ENTITY",
            Label::Neologism => "NEOLOGISM",
            Label::Foreign => "FOREIGN",
            Label::None => "NONE",
            Label::Unknown => "UNKNOWN",
        }
    }

    /// Parses one of the four answer labels, ignoring case.
    pub fn parse_answer(s: &str) -> Option<Label> {
        Label::ANSWERS
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
    }

    /// NEOLOGISM and ENTITY both count as lexical innovation.
    pub fn is_innovation(self) -> bool {
        matches!(self, Label::Neologism | Label::Entity)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("UNKNOWN") {
            return Ok(Label::Unknown);
        }
        Label::parse_answer(s).ok_or_else(|| format!("unknown label `{s}`"))
    }
}
