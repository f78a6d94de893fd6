//! One-word-replacement negatives for every tree level.
//!
//! Each eligible word (noun, adjective, adposition, verb) that is new at a
//! level gets at most one negative. Candidates come from a fixed chain:
//! opposite, co-hyponym, mask fill, and for the WordNet-only strategy a
//! random adjective/adposition. The first candidate that passes
//! [`validate_candidate`] wins; words with no valid candidate are skipped.

pub mod oracle;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::parse::{PosTag, Tagger};
use crate::seed;
use crate::tree::{CaptionTree, TreeLevel};
use crate::wordnet::{is_single_word, WnPos, WordNetStore};

pub use oracle::{sanitize, OracleError, RemoteOracle, StubOracle, WordOracle, MASK_TOKEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeSource {
    Antonym,
    CoHyponym,
    MaskFill,
    RandomPos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Negative {
    pub text: String,
    /// Token position within the level's positive text.
    pub replaced_index: usize,
    pub replaced_word: String,
    pub replacement: String,
    pub source: NegativeSource,
}

#[derive(Debug, thiserror::Error)]
pub enum NegativeError {
    #[error("strategy {0} needs a word oracle")]
    MissingOracle(StrategyKind),
    #[error("word oracle unavailable: {0}")]
    OracleUnavailable(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    /// Lexical database only.
    #[serde(rename = "wn")]
    Wn,
    /// Oracle opposites, then co-hyponyms.
    #[serde(rename = "wn+llm")]
    WnLlmPrompt,
    /// As above, with a mask-fill fallback.
    #[serde(rename = "wn+llm+mask")]
    WnLlmPromptMask,
}

impl StrategyKind {
    pub fn needs_oracle(self) -> bool {
        !matches!(self, StrategyKind::Wn)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Wn => "wn",
            StrategyKind::WnLlmPrompt => "wn+llm",
            StrategyKind::WnLlmPromptMask => "wn+llm+mask",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "wn" => Ok(StrategyKind::Wn),
            "wn+llm" => Ok(StrategyKind::WnLlmPrompt),
            "wn+llm+mask" => Ok(StrategyKind::WnLlmPromptMask),
            other => Err(format!("unknown negative strategy {other:?}")),
        }
    }
}

/// How many seeded co-hyponyms are tried per word before falling through.
pub const DEFAULT_CO_HYPONYM_POOL: usize = 8;

const RANDOM_POS_DRAWS: usize = 32;

pub struct NegativeStrategy<'a> {
    kind: StrategyKind,
    store: &'a WordNetStore,
    oracle: Option<&'a dyn WordOracle>,
    seed: u64,
    co_hyponym_pool: usize,
    adjectives: Vec<String>,
    adpositions: Vec<String>,
}

impl<'a> NegativeStrategy<'a> {
    pub fn new(
        kind: StrategyKind,
        store: &'a WordNetStore,
        oracle: Option<&'a dyn WordOracle>,
        seed: u64,
    ) -> Result<Self, NegativeError> {
        if kind.needs_oracle() && oracle.is_none() {
            return Err(NegativeError::MissingOracle(kind));
        }
        let (adjectives, adpositions) = if kind == StrategyKind::Wn {
            (store.lemmas(WnPos::Adj), Tagger::bundled().words_with_tag(PosTag::Adp))
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Self {
            kind,
            store,
            oracle,
            seed,
            co_hyponym_pool: DEFAULT_CO_HYPONYM_POOL,
            adjectives,
            adpositions,
        })
    }

    pub fn with_co_hyponym_pool(mut self, k: usize) -> Self {
        self.co_hyponym_pool = k.max(1);
        self
    }

    /// Replaces the adposition pool used by the random fallback.
    pub fn with_adpositions(mut self, words: Vec<String>) -> Self {
        self.adpositions = words;
        self
    }

    pub fn kind(&self) -> StrategyKind {
        self.kind
    }

    fn valid(&self, word: &str, candidate: &str, tag: PosTag) -> bool {
        validate_candidate(word, candidate, tag, self.store)
    }

    fn opposite(&self, word: &str, tag: PosTag) -> Result<Option<String>, NegativeError> {
        match (self.kind, self.oracle) {
            (StrategyKind::Wn, _) => Ok(self
                .store
                .antonyms(word, tag)
                .unwrap_or_default()
                .into_iter()
                .find(|c| self.valid(word, c, tag))),
            (_, Some(oracle)) => Ok(oracle
                .opposite(word)?
                .and_then(|raw| sanitize(&raw))
                .filter(|c| self.valid(word, c, tag))),
            (kind, None) => Err(NegativeError::MissingOracle(kind)),
        }
    }

    fn co_hyponym(&self, word: &str, tag: PosTag) -> Option<String> {
        self.store
            .co_hyponyms(word, tag, self.co_hyponym_pool, self.seed)
            .unwrap_or_default()
            .into_iter()
            .find(|c| self.valid(word, c, tag))
    }

    fn mask_fill(&self, level: &TreeLevel, position: usize, tag: PosTag) -> Result<Option<String>, NegativeError> {
        let Some(oracle) = self.oracle else {
            return Err(NegativeError::MissingOracle(self.kind));
        };
        let word = &level.positive_tokens[position].text;
        let prompt = level.render_with(position, MASK_TOKEN);
        Ok(oracle
            .fill_mask(&prompt)?
            .and_then(|raw| sanitize(&raw))
            .filter(|c| self.valid(word, c, tag)))
    }

    fn random_pos(&self, level: &TreeLevel, position: usize, tag: PosTag) -> Option<String> {
        let pool = match tag {
            PosTag::Adj => &self.adjectives,
            PosTag::Adp => &self.adpositions,
            _ => return None,
        };
        if pool.is_empty() {
            return None;
        }
        let word = &level.positive_tokens[position].text;
        let mut rng = seed::rng_for(self.seed, &format!("random:{}:{position}:{word}", level.positive));
        (0..RANDOM_POS_DRAWS)
            .map(|_| &pool[rng.gen_range(0..pool.len())])
            .find(|c| self.valid(word, c, tag))
            .cloned()
    }

    fn candidate(&self, level: &TreeLevel, position: usize) -> Result<Option<(String, NegativeSource)>, NegativeError> {
        let token = &level.positive_tokens[position];
        let (word, tag) = (token.text.as_str(), token.tag);
        if let Some(c) = self.opposite(word, tag)? {
            return Ok(Some((c, NegativeSource::Antonym)));
        }
        if let Some(c) = self.co_hyponym(word, tag) {
            return Ok(Some((c, NegativeSource::CoHyponym)));
        }
        if self.kind == StrategyKind::WnLlmPromptMask {
            if let Some(c) = self.mask_fill(level, position, tag)? {
                return Ok(Some((c, NegativeSource::MaskFill)));
            }
        }
        if self.kind == StrategyKind::Wn {
            if let Some(c) = self.random_pos(level, position, tag) {
                return Ok(Some((c, NegativeSource::RandomPos)));
            }
        }
        Ok(None)
    }
}

/// A replacement is valid when it is a different single word and not a
/// synonym of the word it replaces.
pub fn validate_candidate(positive_word: &str, candidate: &str, tag: PosTag, store: &WordNetStore) -> bool {
    is_single_word(candidate)
        && !candidate.eq_ignore_ascii_case(positive_word)
        && !store.is_synonym(positive_word, candidate, tag)
}

/// Negatives for one level. Words whose original-caption index is in
/// `previously_seen` (or connector words) are left alone.
pub fn generate_for_level(
    level: &TreeLevel,
    previously_seen: &BTreeSet<usize>,
    strategy: &NegativeStrategy<'_>,
) -> Result<Vec<Negative>, NegativeError> {
    let mut out = Vec::new();
    for (position, token) in level.positive_tokens.iter().enumerate() {
        let Some(source) = token.source else { continue };
        if previously_seen.contains(&source) || !token.tag.is_eligible() {
            continue;
        }
        if let Some((replacement, origin)) = strategy.candidate(level, position)? {
            out.push(Negative {
                text: level.render_with(position, &replacement),
                replaced_index: position,
                replaced_word: token.text.clone(),
                replacement,
                source: origin,
            });
        }
    }
    Ok(out)
}

/// Fills every level's negatives, threading the set of already-seen words
/// from coarse to fine.
pub fn attach_negatives(tree: &mut CaptionTree, strategy: &NegativeStrategy<'_>) -> Result<(), NegativeError> {
    let mut seen = BTreeSet::new();
    for level in &mut tree.levels {
        level.negatives = generate_for_level(level, &seen, strategy)?;
        seen.extend(level.positive_tokens.iter().filter_map(|t| t.source));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
