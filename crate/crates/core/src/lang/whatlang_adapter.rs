use crate::error::{Error, Result};

use super::{LangVerdict, LanguageDetector};

/// Adapter over the `whatlang` detector, restricted to the inventory.
pub struct WhatlangDetector {
    target: String,
    detector: whatlang::Detector,
}

impl WhatlangDetector {
    pub fn new(inventory: &[impl AsRef<str>], target: &str) -> Result<Self> {
        let mut langs = Vec::new();
        for code in inventory {
            match whatlang::Lang::from_code(code.as_ref()) {
                Some(l) => langs.push(l),
                None => log::warn!("whatlang does not know `{}`; skipping it", code.as_ref()),
            }
        }
        if whatlang::Lang::from_code(target).is_none_or(|t| !langs.contains(&t)) {
            return Err(Error::Config(format!(
                "target language `{target}` is not available to whatlang"
            )));
        }
        Ok(WhatlangDetector {
            target: target.to_string(),
            detector: whatlang::Detector::with_allowlist(langs),
        })
    }
}

impl LanguageDetector for WhatlangDetector {
    fn target(&self) -> &str {
        &self.target
    }

    fn detect(&self, surface: &str) -> LangVerdict {
        match self.detector.detect(surface) {
            Some(info) if surface.chars().count() >= 3 => LangVerdict {
                language: info.lang().code().to_string(),
                confidence: info.confidence().clamp(0.0, 1.0),
            },
            _ => LangVerdict {
                language: self.target.clone(),
                confidence: 0.0,
            },
        }
    }
}
