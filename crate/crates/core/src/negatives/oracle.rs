//! Word oracles: the generative side of negative generation.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::remote::{JsonClient, RemoteError};

/// Mask token substituted for the positive word in fill-mask prompts.
pub const MASK_TOKEN: &str = "<extra_id_0>";

#[derive(Debug, Clone, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Remote(#[from] RemoteError),
    #[error("oracle fixture {path}: {message}")]
    Fixture { path: String, message: String },
}

/// Source of replacement words. Implementations must be safe to call from
/// several threads at once.
pub trait WordOracle: Send + Sync {
    fn opposite(&self, word: &str) -> Result<Option<String>, OracleError>;

    /// Completes `prompt`, which contains [`MASK_TOKEN`] exactly once.
    fn fill_mask(&self, prompt: &str) -> Result<Option<String>, OracleError>;
}

/// Reduces free generator output to a single lowercase token.
pub fn sanitize(raw: &str) -> Option<String> {
    let first = raw.split_whitespace().next()?;
    let word: String = first
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .flat_map(char::to_lowercase)
        .collect();
    (!word.is_empty()).then_some(word)
}

/// Fixture-backed oracle: `{"opposite": {word: word}, "mask": {prompt: word}}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StubOracle {
    #[serde(default)]
    pub opposite: BTreeMap<String, String>,
    #[serde(default)]
    pub mask: BTreeMap<String, String>,
}

impl StubOracle {
    pub fn from_file(path: &Path) -> Result<Self, OracleError> {
        let fixture = |message: String| OracleError::Fixture {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| fixture(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| fixture(e.to_string()))
    }
}

impl WordOracle for StubOracle {
    fn opposite(&self, word: &str) -> Result<Option<String>, OracleError> {
        Ok(self.opposite.get(word).cloned())
    }

    fn fill_mask(&self, prompt: &str) -> Result<Option<String>, OracleError> {
        Ok(self.mask.get(prompt).cloned())
    }
}

#[derive(Serialize)]
struct OppositeRequest<'a> {
    word: &'a str,
}

#[derive(Serialize)]
struct FillMaskRequest<'a> {
    prompt: &'a str,
}

/// `{"word": "..."}` or `{"word": null}`.
#[derive(Debug, Deserialize)]
struct WordResponse {
    word: Option<String>,
}

/// HTTP oracle: `POST /opposite {"word"}` and `POST /fill_mask {"prompt"}`,
/// both answering `{"word": string | null}`.
#[derive(Debug, Clone)]
pub struct RemoteOracle {
    client: JsonClient,
}

impl RemoteOracle {
    pub fn new(client: JsonClient) -> Self {
        Self { client }
    }

    pub fn connect(base_url: &str) -> Self {
        Self::new(JsonClient::new(base_url))
    }
}

impl WordOracle for RemoteOracle {
    fn opposite(&self, word: &str) -> Result<Option<String>, OracleError> {
        let resp: WordResponse = self.client.post("/opposite", &OppositeRequest { word })?;
        Ok(resp.word)
    }

    fn fill_mask(&self, prompt: &str) -> Result<Option<String>, OracleError> {
        let resp: WordResponse = self.client.post("/fill_mask", &FillMaskRequest { prompt })?;
        Ok(resp.word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sanitize_takes_first_clean_token() {
        assert_eq!(sanitize("Down."), Some("down".into()));
        assert_eq!(sanitize("  old, or aged"), Some("old".into()));
        assert_eq!(sanitize("\"gathered\""), Some("gathered".into()));
        assert_eq!(sanitize("..."), None);
        assert_eq!(sanitize(""), None);
    }

    #[test]
    fn stub_fixture_parses() {
        let stub: StubOracle =
            serde_json::from_str(r#"{"opposite": {"up": "down"}, "mask": {"a <extra_id_0>": "cat"}}"#).unwrap();
        assert_eq!(stub.opposite("up").unwrap(), Some("down".into()));
        assert_eq!(stub.opposite("left").unwrap(), None);
        assert_eq!(stub.fill_mask("a <extra_id_0>").unwrap(), Some("cat".into()));
        assert!(serde_json::from_str::<StubOracle>(r#"{"opposites": {}}"#).is_err());
    }

    #[test]
    fn stub_fixture_file_errors() {
        let err = StubOracle::from_file(Path::new("/nonexistent.json")).unwrap_err();
        assert!(matches!(err, OracleError::Fixture { .. }));
    }
}
