//! Caption parsing: normalization, tokenization, part-of-speech tagging and
//! noun-phrase chunking.

mod chunk;
mod tagger;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use chunk::chunk_noun_phrases;
pub use tagger::{LexiconError, Tagger};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("caption is empty after normalization")]
    EmptyCaption,
    #[error("caption contains no noun phrase: {0:?}")]
    NoNounPhrase(String),
    #[error("expected {tokens} tags, got {tags}")]
    TagCount { tokens: usize, tags: usize },
}

/// Coarse part-of-speech tag set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adp,
    Det,
    Num,
    Pron,
    Adv,
    Conj,
    Part,
    Other,
}

impl PosTag {
    pub const ALL: [PosTag; 11] = [
        PosTag::Noun,
        PosTag::Verb,
        PosTag::Adj,
        PosTag::Adp,
        PosTag::Det,
        PosTag::Num,
        PosTag::Pron,
        PosTag::Adv,
        PosTag::Conj,
        PosTag::Part,
        PosTag::Other,
    ];

    /// Tags whose words receive one-word-replacement negatives.
    pub const ELIGIBLE: [PosTag; 4] = [PosTag::Noun, PosTag::Adp, PosTag::Verb, PosTag::Adj];

    pub fn is_eligible(self) -> bool {
        Self::ELIGIBLE.contains(&self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adp => "ADP",
            PosTag::Det => "DET",
            PosTag::Num => "NUM",
            PosTag::Pron => "PRON",
            PosTag::Adv => "ADV",
            PosTag::Conj => "CONJ",
            PosTag::Part => "PART",
            PosTag::Other => "OTHER",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PosTag::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown part-of-speech tag {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub index: usize,
}

/// Half-open token span `[start, end)` covering one noun phrase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NounPhrase {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedCaption {
    pub raw: String,
    pub tokens: Vec<Token>,
    pub tags: Vec<PosTag>,
    pub noun_phrases: Vec<NounPhrase>,
}

impl ParsedCaption {
    /// Builds a parsed caption from pre-computed tags, re-deriving tokens and
    /// noun phrases.
    pub fn from_tags(raw: &str, tags: Vec<PosTag>) -> Result<Self, ParseError> {
        let tokens = tokenize(raw)?;
        if tokens.len() != tags.len() {
            return Err(ParseError::TagCount {
                tokens: tokens.len(),
                tags: tags.len(),
            });
        }
        let noun_phrases = chunk_noun_phrases(&tokens, &tags)?;
        Ok(Self {
            raw: raw.to_string(),
            tokens,
            tags,
            noun_phrases,
        })
    }

    /// Normalized caption text: tokens joined by single spaces.
    pub fn normalized(&self) -> String {
        join(&self.tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Lowercases, strips ASCII punctuation and collapses whitespace.
pub fn normalize(caption: &str) -> String {
    caption
        .split_whitespace()
        .map(|word| {
            word.chars()
                .filter(|c| !c.is_ascii_punctuation())
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn tokenize(caption: &str) -> Result<Vec<Token>, ParseError> {
    let tokens: Vec<Token> = normalize(caption)
        .split(' ')
        .filter(|w| !w.is_empty())
        .enumerate()
        .map(|(index, text)| Token {
            text: text.to_string(),
            index,
        })
        .collect();
    if tokens.is_empty() {
        return Err(ParseError::EmptyCaption);
    }
    Ok(tokens)
}

pub fn join(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ")
}

/// Full parse: tokenize, tag and chunk.
pub fn parse(caption: &str, tagger: &Tagger) -> Result<ParsedCaption, ParseError> {
    let tokens = tokenize(caption)?;
    let tags = tagger.tag_pos(&tokens);
    let noun_phrases = chunk_noun_phrases(&tokens, &tags)?;
    Ok(ParsedCaption {
        raw: caption.to_string(),
        tokens,
        tags,
        noun_phrases,
    })
}
