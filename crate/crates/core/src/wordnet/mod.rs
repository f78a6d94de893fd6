//! Reader for the WordNet plain-text database (`index.*` / `data.*`) and the
//! lexical queries the negative generator needs.
//!
//! The store is immutable after [`WordNetStore::load`] and safe to share
//! across threads.

mod parser;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;

use crate::parse::PosTag;
use crate::seed;

#[derive(Debug, thiserror::Error)]
pub enum WordNetError {
    #[error("missing database file {0}")]
    MissingFile(PathBuf),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record in {file} at byte {offset}: {message}")]
    MalformedRecord {
        file: PathBuf,
        offset: u64,
        message: String,
    },
    #[error("{word:?} is not in the {pos} index")]
    UnknownWord { word: String, pos: PosTag },
}

/// Part of speech as stored in the database files. Adjective satellites are
/// folded into [`WnPos::Adj`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WnPos {
    Noun,
    Verb,
    Adj,
    Adv,
}

impl WnPos {
    pub const ALL: [WnPos; 4] = [WnPos::Noun, WnPos::Verb, WnPos::Adj, WnPos::Adv];

    pub fn file_suffix(self) -> &'static str {
        match self {
            WnPos::Noun => "noun",
            WnPos::Verb => "verb",
            WnPos::Adj => "adj",
            WnPos::Adv => "adv",
        }
    }

    fn from_char(c: &str) -> Option<Self> {
        match c {
            "n" => Some(WnPos::Noun),
            "v" => Some(WnPos::Verb),
            "a" | "s" => Some(WnPos::Adj),
            "r" => Some(WnPos::Adv),
            _ => None,
        }
    }

    /// Database parts of speech consulted for a caption tag. The database has
    /// no adposition class; adpositions resolve through the adverb and
    /// adjective entries ("up", "in", "off").
    pub fn for_tag(tag: PosTag) -> &'static [WnPos] {
        match tag {
            PosTag::Noun => &[WnPos::Noun],
            PosTag::Verb => &[WnPos::Verb],
            PosTag::Adj => &[WnPos::Adj],
            PosTag::Adv => &[WnPos::Adv],
            PosTag::Adp => &[WnPos::Adv, WnPos::Adj],
            _ => &[],
        }
    }
}

impl fmt::Display for WnPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_suffix())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SynsetId {
    pub offset: u64,
    pub pos: WnPos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synset {
    pub id: SynsetId,
    pub lemmas: Vec<String>,
    pub hypernym_ids: Vec<SynsetId>,
    /// `&` links: satellite → head, or head → satellites.
    pub similar_ids: Vec<SynsetId>,
    pub antonym_lemmas: BTreeMap<String, Vec<String>>,
    pub satellite: bool,
}

impl Synset {
    pub fn contains(&self, lemma: &str) -> bool {
        self.lemmas.iter().any(|l| l == lemma)
    }
}

#[derive(Debug, Default)]
pub struct WordNetStore {
    index: HashMap<(String, WnPos), Vec<SynsetId>>,
    synsets: HashMap<SynsetId, Synset>,
    hyponyms: HashMap<SynsetId, Vec<SynsetId>>,
}

impl WordNetStore {
    /// Parses `index.{noun,verb,adj,adv}` and `data.{noun,verb,adj,adv}` from
    /// `dir`.
    pub fn load(dir: &Path) -> Result<Self, WordNetError> {
        let mut synsets = HashMap::new();
        let mut raw_antonyms = Vec::new();
        for pos in WnPos::ALL {
            let path = dir.join(format!("data.{}", pos.file_suffix()));
            let text = read(&path)?;
            for record in parser::parse_data(&path, &text, pos)? {
                raw_antonyms.extend(record.antonyms.iter().map(|a| (record.synset.id, *a)));
                synsets.insert(record.synset.id, record.synset);
            }
        }
        let mut index: HashMap<(String, WnPos), Vec<SynsetId>> = HashMap::new();
        for pos in WnPos::ALL {
            let path = dir.join(format!("index.{}", pos.file_suffix()));
            let text = read(&path)?;
            for entry in parser::parse_index(&path, &text, pos)? {
                for id in &entry.synsets {
                    if !synsets.contains_key(id) {
                        return Err(WordNetError::MalformedRecord {
                            file: path.clone(),
                            offset: entry.line_offset,
                            message: format!("lemma {:?} references missing synset {}", entry.lemma, id.offset),
                        });
                    }
                }
                index.entry((entry.lemma, pos)).or_default().extend(entry.synsets);
            }
        }
        for (owner, pointer) in raw_antonyms {
            let source = lemma_at(&synsets, owner, pointer.source_word);
            let target = lemma_at(&synsets, pointer.target, pointer.target_word);
            if let (Some(source), Some(target)) = (source, target) {
                let synset = synsets.get_mut(&owner).expect("owner parsed");
                let entry = synset.antonym_lemmas.entry(source).or_default();
                if !entry.contains(&target) {
                    entry.push(target);
                }
            }
        }
        let mut hyponyms: HashMap<SynsetId, Vec<SynsetId>> = HashMap::new();
        for synset in synsets.values() {
            for parent in &synset.hypernym_ids {
                hyponyms.entry(*parent).or_default().push(synset.id);
            }
        }
        for children in hyponyms.values_mut() {
            children.sort();
        }
        Ok(Self {
            index,
            synsets,
            hyponyms,
        })
    }

    pub fn synset_count(&self) -> usize {
        self.synsets.len()
    }

    pub fn synset(&self, id: SynsetId) -> Option<&Synset> {
        self.synsets.get(&id)
    }

    pub fn synset_ids(&self, word: &str, pos: WnPos) -> &[SynsetId] {
        self.index
            .get(&(word.to_lowercase(), pos))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    fn synsets_for_tag<'a>(&'a self, word: &str, tag: PosTag) -> impl Iterator<Item = &'a Synset> + 'a {
        let word = word.to_lowercase();
        WnPos::for_tag(tag)
            .iter()
            .flat_map(move |pos| self.synset_ids(&word, *pos).to_vec())
            .filter_map(|id| self.synsets.get(&id))
    }

    pub fn contains(&self, word: &str, tag: PosTag) -> bool {
        WnPos::for_tag(tag)
            .iter()
            .any(|pos| !self.synset_ids(word, *pos).is_empty())
    }

    fn require(&self, word: &str, tag: PosTag) -> Result<(), WordNetError> {
        if self.contains(word, tag) {
            Ok(())
        } else {
            Err(WordNetError::UnknownWord {
                word: word.to_string(),
                pos: tag,
            })
        }
    }

    /// True iff `a` and `b` share a synset of the given part of speech.
    pub fn is_synonym(&self, a: &str, b: &str, tag: PosTag) -> bool {
        let b = b.to_lowercase();
        self.synsets_for_tag(a, tag).any(|s| s.contains(&b))
    }

    /// Lemmas sharing a synset with `word`, excluding `word`; sorted.
    pub fn synonyms(&self, word: &str, tag: PosTag) -> Result<Vec<String>, WordNetError> {
        self.require(word, tag)?;
        let word = word.to_lowercase();
        let mut out: Vec<String> = self
            .synsets_for_tag(&word, tag)
            .flat_map(|s| s.lemmas.iter().cloned())
            .filter(|l| *l != word)
            .collect();
        out.sort();
        out.dedup();
        Ok(out)
    }

    pub fn antonyms(&self, word: &str, tag: PosTag) -> Result<Vec<String>, WordNetError> {
        self.require(word, tag)?;
        let word = word.to_lowercase();
        let mut out: Vec<String> = Vec::new();
        for synset in self.synsets_for_tag(&word, tag) {
            for antonym in synset.antonym_lemmas.get(&word).into_iter().flatten() {
                if !out.contains(antonym) {
                    out.push(antonym.clone());
                }
            }
        }
        Ok(out)
    }

    /// Parents in the taxonomy: hypernyms, or for adjective satellites the
    /// head adjective they cluster around.
    fn parents(&self, synset: &Synset) -> Vec<SynsetId> {
        let mut parents = synset.hypernym_ids.clone();
        if synset.satellite {
            parents.extend(synset.similar_ids.iter().copied());
        }
        parents
    }

    fn children(&self, parent: SynsetId) -> Vec<SynsetId> {
        let mut children = self.hyponyms.get(&parent).cloned().unwrap_or_default();
        if let Some(head) = self.synsets.get(&parent) {
            if !head.satellite && head.id.pos == WnPos::Adj {
                children.extend(
                    head.similar_ids
                        .iter()
                        .filter(|id| self.synsets.get(id).is_some_and(|s| s.satellite)),
                );
            }
        }
        children
    }

    /// Every single-word co-hyponym of `word`, excluding the word and its
    /// synonyms; sorted and deduplicated.
    pub fn all_co_hyponyms(&self, word: &str, tag: PosTag) -> Result<Vec<String>, WordNetError> {
        self.require(word, tag)?;
        let word = word.to_lowercase();
        let own: Vec<&Synset> = self.synsets_for_tag(&word, tag).collect();
        let mut out = Vec::new();
        for synset in &own {
            for parent in self.parents(synset) {
                for child in self.children(parent) {
                    if child == synset.id {
                        continue;
                    }
                    let Some(sibling) = self.synsets.get(&child) else {
                        continue;
                    };
                    out.extend(
                        sibling
                            .lemmas
                            .iter()
                            .filter(|l| is_single_word(l) && **l != word)
                            .filter(|l| !self.is_synonym(&word, l, tag))
                            .cloned(),
                    );
                }
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Up to `k` co-hyponyms drawn uniformly without replacement, seeded by
    /// `(seed, word, tag)`.
    pub fn co_hyponyms(&self, word: &str, tag: PosTag, k: usize, seed: u64) -> Result<Vec<String>, WordNetError> {
        let candidates = self.all_co_hyponyms(word, tag)?;
        let take = k.min(candidates.len());
        let mut rng = seed::rng_for(seed, &format!("cohyponym:{}:{tag}", word.to_lowercase()));
        Ok(sample(&mut rng, candidates.len(), take)
            .into_iter()
            .map(|i| candidates[i].clone())
            .collect())
    }

    /// Sorted single-word lemmas of one part of speech.
    pub fn lemmas(&self, pos: WnPos) -> Vec<String> {
        let mut out: Vec<String> = self
            .index
            .keys()
            .filter(|(lemma, p)| *p == pos && is_single_word(lemma))
            .map(|(lemma, _)| lemma.clone())
            .collect();
        out.sort();
        out
    }
}

/// Collocations are stored with underscores; hyphenated forms are kept out
/// too so a replacement stays one plain token.
pub fn is_single_word(lemma: &str) -> bool {
    !lemma.is_empty() && lemma.chars().all(|c| c.is_alphanumeric())
}

fn lemma_at(synsets: &HashMap<SynsetId, Synset>, id: SynsetId, word_number: usize) -> Option<String> {
    let synset = synsets.get(&id)?;
    word_number.checked_sub(1).and_then(|i| synset.lemmas.get(i)).cloned()
}

fn read(path: &Path) -> Result<String, WordNetError> {
    if !path.is_file() {
        return Err(WordNetError::MissingFile(path.to_path_buf()));
    }
    std::fs::read_to_string(path).map_err(|source| WordNetError::Io {
        path: path.to_path_buf(),
        source,
    })
}
