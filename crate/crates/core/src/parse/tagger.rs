use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{PosTag, Token};

const BUNDLED_LEXICON: &str = include_str!("lexicon.tsv");

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("reading lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Lexicon-backed tagger with suffix-rule fallback.
///
/// Lookup order: lexicon entry, numeric literal, suffix rules, then `NOUN`.
#[derive(Debug, Clone)]
pub struct Tagger {
    lexicon: HashMap<String, PosTag>,
}

impl Tagger {
    /// Tagger over the lexicon shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_lexicon_str(BUNDLED_LEXICON).expect("bundled lexicon is well formed")
    }

    /// Loads a `word<TAB>TAG` lexicon file. Blank lines and lines starting
    /// with `#` are ignored; the first entry for a word wins.
    pub fn from_file(path: &Path) -> Result<Self, LexiconError> {
        let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_lexicon_str(&text)
    }

    pub fn from_lexicon_str(text: &str) -> Result<Self, LexiconError> {
        let mut lexicon = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, tag) = line.split_once('\t').ok_or_else(|| LexiconError::Malformed {
                line: i + 1,
                message: "expected word<TAB>TAG".into(),
            })?;
            let word = word.trim().to_lowercase();
            if word.is_empty() || word.contains(char::is_whitespace) {
                return Err(LexiconError::Malformed {
                    line: i + 1,
                    message: format!("invalid word {word:?}"),
                });
            }
            let tag: PosTag = tag
                .trim()
                .parse()
                .map_err(|message| LexiconError::Malformed { line: i + 1, message })?;
            lexicon.entry(word).or_insert(tag);
        }
        Ok(Self { lexicon })
    }

    /// Merges another lexicon over this one; entries in `other` win.
    pub fn with_overrides(mut self, other: &Tagger) -> Self {
        for (word, tag) in &other.lexicon {
            self.lexicon.insert(word.clone(), *tag);
        }
        self
    }

    pub fn lookup(&self, word: &str) -> Option<PosTag> {
        self.lexicon.get(word).copied()
    }

    /// All lexicon words carrying `tag`, sorted.
    pub fn words_with_tag(&self, tag: PosTag) -> Vec<String> {
        let mut words: Vec<String> = self
            .lexicon
            .iter()
            .filter(|(_, t)| **t == tag)
            .map(|(w, _)| w.clone())
            .collect();
        words.sort();
        words
    }

    pub fn tag_word(&self, word: &str) -> PosTag {
        if let Some(tag) = self.lookup(word) {
            return tag;
        }
        if word.chars().all(|c| c.is_ascii_digit()) {
            return PosTag::Num;
        }
        suffix_tag(word).unwrap_or(PosTag::Noun)
    }

    pub fn tag_pos(&self, tokens: &[Token]) -> Vec<PosTag> {
        tokens.iter().map(|t| self.tag_word(&t.text)).collect()
    }
}

impl Default for Tagger {
    fn default() -> Self {
        Self::bundled()
    }
}

fn suffix_tag(word: &str) -> Option<PosTag> {
    let len = word.chars().count();
    if len > 4 && word.ends_with("ing") {
        return Some(PosTag::Verb);
    }
    if len > 3 && word.ends_with("ed") {
        return Some(PosTag::Verb);
    }
    if len > 3 && word.ends_with("ly") {
        return Some(PosTag::Adv);
    }
    const ADJ_SUFFIXES: [&str; 7] = ["ous", "ful", "ive", "able", "ible", "less", "ish"];
    if len > 4 && ADJ_SUFFIXES.iter().any(|s| word.ends_with(s)) {
        return Some(PosTag::Adj);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::tokenize;

    fn tag(word: &str) -> PosTag {
        Tagger::bundled().tag_word(word)
    }

    #[test]
    fn replaced_words_of_the_worked_example() {
        assert_eq!(tag("green"), PosTag::Adj);
        assert_eq!(tag("in"), PosTag::Adp);
        assert_eq!(tag("flying"), PosTag::Verb);
        assert_eq!(tag("standing"), PosTag::Verb);
        assert_eq!(tag("several"), PosTag::Adj);
        assert_eq!(tag("while"), PosTag::Conj);
        assert_eq!(tag("together"), PosTag::Adv);
    }

    #[test]
    fn suffix_rules_and_default() {
        assert_eq!(tag("juggling"), PosTag::Verb);
        assert_eq!(tag("painted"), PosTag::Verb);
        assert_eq!(tag("slowly"), PosTag::Adv);
        assert_eq!(tag("dangerous"), PosTag::Adj);
        assert_eq!(tag("42"), PosTag::Num);
        assert_eq!(tag("zorblax"), PosTag::Noun);
        // lexicon beats the suffix rule
        assert_eq!(tag("building"), PosTag::Noun);
        assert_eq!(tag("bed"), PosTag::Noun);
    }

    #[test]
    fn custom_lexicon_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lex.tsv");
        std::fs::write(&path, "# custom\nkites\tVERB\n\nzorblax\tADJ\n").unwrap();
        let tagger = Tagger::from_file(&path).unwrap();
        assert_eq!(tagger.tag_word("zorblax"), PosTag::Adj);
        let merged = Tagger::bundled().with_overrides(&tagger);
        assert_eq!(merged.tag_word("kites"), PosTag::Verb);
        assert_eq!(merged.tag_word("green"), PosTag::Adj);
    }

    #[test]
    fn malformed_lexicon_reports_line() {
        let err = Tagger::from_lexicon_str("ok\tNOUN\nbroken line\n").unwrap_err();
        assert!(matches!(err, LexiconError::Malformed { line: 2, .. }));
        let err = Tagger::from_lexicon_str("ok\tNOPE\n").unwrap_err();
        assert!(matches!(err, LexiconError::Malformed { line: 1, .. }));
    }

    #[test]
    fn missing_lexicon_file() {
        let err = Tagger::from_file(Path::new("/nonexistent/lexicon.tsv")).unwrap_err();
        assert!(matches!(err, LexiconError::Io { .. }));
    }

    #[test]
    fn tagging_is_deterministic() {
        let tokens = tokenize("a man riding a wave on top of a surfboard").unwrap();
        let tagger = Tagger::bundled();
        assert_eq!(tagger.tag_pos(&tokens), tagger.tag_pos(&tokens));
        assert_eq!(tagger.tag_pos(&tokens).len(), tokens.len());
    }
}
