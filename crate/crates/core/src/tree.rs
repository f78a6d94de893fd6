//! Coarse-to-fine caption trees.
//!
//! A tree reconstructs one caption as a sequence of positive sub-captions,
//! starting from its first noun phrase and ending with the full caption.
//! Each level later carries one-word-replacement negatives (see
//! [`crate::negatives`]); [`constrain`] then trims depth and negative count.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::negatives::Negative;
use crate::parse::{tokenize, ParseError, ParsedCaption, PosTag};
use crate::seed;

pub const DEFAULT_CONNECTOR: &str = "and";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("invalid connector {0:?}")]
    InvalidConnector(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeStructure {
    Basic,
    Incremental,
}

impl fmt::Display for TreeStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TreeStructure::Basic => "basic",
            TreeStructure::Incremental => "incremental",
        })
    }
}

impl FromStr for TreeStructure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "basic" => Ok(TreeStructure::Basic),
            "incremental" => Ok(TreeStructure::Incremental),
            other => Err(format!("unknown tree structure {other:?}")),
        }
    }
}

/// One word of a level's positive text. `source` is the index of the word in
/// the original caption, or `None` for inserted connector words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelToken {
    pub text: String,
    pub tag: PosTag,
    pub source: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeLevel {
    pub level_index: usize,
    pub positive: String,
    pub positive_tokens: Vec<LevelToken>,
    pub negatives: Vec<Negative>,
    /// Original-caption indices that first appear at this level.
    pub introduced_tokens: BTreeSet<usize>,
}

impl TreeLevel {
    /// Position within this level of the token taken from original index `source`.
    pub fn position_of(&self, source: usize) -> Option<usize> {
        self.positive_tokens.iter().position(|t| t.source == Some(source))
    }

    /// The positive text with the token at `position` replaced by `word`.
    pub fn render_with(&self, position: usize, word: &str) -> String {
        self.positive_tokens
            .iter()
            .enumerate()
            .map(|(i, t)| if i == position { word } else { t.text.as_str() })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn sources(&self) -> Vec<Option<usize>> {
        self.positive_tokens.iter().map(|t| t.source).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptionTree {
    pub caption_id: String,
    pub source: ParsedCaption,
    pub structure: TreeStructure,
    pub levels: Vec<TreeLevel>,
    pub connector: String,
}

impl CaptionTree {
    pub fn with_id(mut self, caption_id: impl Into<String>) -> Self {
        self.caption_id = caption_id.into();
        self
    }

    pub fn negative_count(&self) -> usize {
        self.levels.iter().map(|l| l.negatives.len()).sum()
    }

    /// Rebuilds a tree from level positives given as original-caption index
    /// sequences (`None` = connector word). Used when decoding stored trees.
    pub fn from_level_sources(
        source: ParsedCaption,
        structure: TreeStructure,
        connector: &str,
        levels: Vec<(Vec<Option<usize>>, Vec<Negative>)>,
    ) -> Result<Self, TreeError> {
        let connector_tokens = connector_tokens(connector)?;
        let mut built = Vec::with_capacity(levels.len());
        for (sources, negatives) in levels {
            let mut connectors = connector_tokens.iter().cycle();
            let tokens = sources
                .into_iter()
                .map(|src| match src {
                    Some(i) if i < source.len() => Ok(LevelToken {
                        text: source.tokens[i].text.clone(),
                        tag: source.tags[i],
                        source: Some(i),
                    }),
                    Some(i) => Err(TreeError::InvalidConstraint(format!(
                        "token source {i} outside caption of {} tokens",
                        source.len()
                    ))),
                    None => Ok(connector_token(connectors.next().expect("cycle"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut level = new_level(tokens);
            level.negatives = negatives;
            built.push(level);
        }
        let mut tree = CaptionTree {
            caption_id: String::new(),
            source,
            structure,
            levels: built,
            connector: connector.to_string(),
        };
        tree.reindex();
        Ok(tree)
    }

    fn reindex(&mut self) {
        let mut seen = BTreeSet::new();
        for (i, level) in self.levels.iter_mut().enumerate() {
            level.level_index = i;
            level.introduced_tokens = level
                .positive_tokens
                .iter()
                .filter_map(|t| t.source)
                .filter(|s| !seen.contains(s))
                .collect();
            seen.extend(level.introduced_tokens.iter().copied());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeOptions {
    pub connector: String,
    /// Give a last noun phrase that ends the caption a level of its own: the
    /// connector-joined level (Incremental) or the bare phrase (Basic).
    /// Off by default, so such a phrase only shows up in the full caption.
    pub final_phrase_level: bool,
}

impl Default for TreeOptions {
    fn default() -> Self {
        Self {
            connector: DEFAULT_CONNECTOR.to_string(),
            final_phrase_level: false,
        }
    }
}

fn connector_tokens(connector: &str) -> Result<Vec<String>, TreeError> {
    tokenize(connector)
        .map(|t| t.into_iter().map(|t| t.text).collect())
        .map_err(|_| TreeError::InvalidConnector(connector.to_string()))
}

fn connector_token(text: &str) -> LevelToken {
    LevelToken {
        text: text.to_string(),
        tag: PosTag::Conj,
        source: None,
    }
}

fn original_tokens(parsed: &ParsedCaption, start: usize, end: usize) -> Vec<LevelToken> {
    (start..end)
        .map(|i| LevelToken {
            text: parsed.tokens[i].text.clone(),
            tag: parsed.tags[i],
            source: Some(i),
        })
        .collect()
}

fn new_level(positive_tokens: Vec<LevelToken>) -> TreeLevel {
    let positive = positive_tokens
        .iter()
        .map(|t| t.text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    TreeLevel {
        level_index: 0,
        positive,
        positive_tokens,
        negatives: Vec::new(),
        introduced_tokens: BTreeSet::new(),
    }
}

/// Collects levels, dropping any whose text repeats an earlier level.
struct LevelSink {
    levels: Vec<TreeLevel>,
    texts: HashSet<String>,
}

impl LevelSink {
    fn new() -> Self {
        Self {
            levels: Vec::new(),
            texts: HashSet::new(),
        }
    }

    fn push(&mut self, tokens: Vec<LevelToken>) {
        let level = new_level(tokens);
        if self.texts.insert(level.positive.clone()) {
            self.levels.push(level);
        }
    }

    fn finish(mut self, parsed: &ParsedCaption, structure: TreeStructure, connector: &str) -> CaptionTree {
        self.push(original_tokens(parsed, 0, parsed.len()));
        // the full caption must close the tree even if it appeared earlier
        if let Some(pos) = self.levels.iter().position(|l| l.positive == parsed.normalized()) {
            let full = self.levels.remove(pos);
            self.levels.push(full);
        }
        let mut tree = CaptionTree {
            caption_id: String::new(),
            source: parsed.clone(),
            structure,
            levels: self.levels,
            connector: connector.to_string(),
        };
        tree.reindex();
        tree
    }
}

fn require_phrases(parsed: &ParsedCaption) -> Result<(), TreeError> {
    if parsed.noun_phrases.is_empty() {
        return Err(ParseError::NoNounPhrase(parsed.normalized()).into());
    }
    Ok(())
}

pub fn build_incremental(parsed: &ParsedCaption, connector: &str) -> Result<CaptionTree, TreeError> {
    build_incremental_with(
        parsed,
        &TreeOptions {
            connector: connector.to_string(),
            final_phrase_level: false,
        },
    )
}

pub fn build_incremental_with(parsed: &ParsedCaption, options: &TreeOptions) -> Result<CaptionTree, TreeError> {
    require_phrases(parsed)?;
    let connector = connector_tokens(&options.connector)?;
    let phrases = &parsed.noun_phrases;
    let full_len = parsed.len();

    let mut sink = LevelSink::new();
    let first = &phrases[0];
    let mut previous = original_tokens(parsed, first.start, first.end);
    sink.push(previous.clone());

    for (i, np) in phrases.iter().enumerate().skip(1) {
        let is_last = i + 1 == phrases.len();
        let prefix = original_tokens(parsed, 0, np.end);
        if !(is_last && np.end == full_len && !options.final_phrase_level) {
            let mut concat = previous.clone();
            concat.extend(connector.iter().map(|c| connector_token(c)));
            concat.extend(original_tokens(parsed, np.start, np.end));
            sink.push(concat);
        }
        sink.push(prefix.clone());
        previous = prefix;
    }
    Ok(sink.finish(parsed, TreeStructure::Incremental, &options.connector))
}

pub fn build_basic(parsed: &ParsedCaption) -> Result<CaptionTree, TreeError> {
    build_basic_with(parsed, &TreeOptions::default())
}

pub fn build_basic_with(parsed: &ParsedCaption, options: &TreeOptions) -> Result<CaptionTree, TreeError> {
    require_phrases(parsed)?;
    connector_tokens(&options.connector)?;
    let phrases = &parsed.noun_phrases;
    let mut sink = LevelSink::new();
    for (i, np) in phrases.iter().enumerate() {
        let is_last = i + 1 == phrases.len();
        if is_last && np.end == parsed.len() && !options.final_phrase_level {
            continue;
        }
        sink.push(original_tokens(parsed, np.start, np.end));
    }
    Ok(sink.finish(parsed, TreeStructure::Basic, &options.connector))
}

pub fn build(
    parsed: &ParsedCaption,
    structure: TreeStructure,
    options: &TreeOptions,
) -> Result<CaptionTree, TreeError> {
    match structure {
        TreeStructure::Basic => build_basic_with(parsed, options),
        TreeStructure::Incremental => build_incremental_with(parsed, options),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truncation {
    /// Keep the first negatives in (level, token) order.
    #[default]
    Ordered,
    /// Keep a seeded uniform subset, still emitted in (level, token) order.
    Seeded,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TreeConstraints {
    pub max_depth: Option<usize>,
    pub max_negatives: Option<usize>,
    pub truncation: Truncation,
}

impl TreeConstraints {
    pub fn validate(&self) -> Result<(), TreeError> {
        if self.max_depth == Some(0) {
            return Err(TreeError::InvalidConstraint("max_depth must be at least 1".into()));
        }
        if self.max_negatives == Some(0) {
            return Err(TreeError::InvalidConstraint("max_negatives must be at least 1".into()));
        }
        Ok(())
    }
}

/// Applies depth and negative-count limits to a tree with negatives attached.
///
/// Depth `k` keeps the `k` deepest levels. Each negative of a dropped level is
/// re-rendered as the same word replacement on the shallowest retained level
/// containing that word, so the negative count is unchanged. Afterwards
/// `max_negatives` keeps at most `m` negatives.
pub fn constrain(tree: &CaptionTree, constraints: &TreeConstraints, seed: u64) -> Result<CaptionTree, TreeError> {
    constraints.validate()?;
    let mut out = tree.clone();
    if let Some(depth) = constraints.max_depth {
        limit_depth(&mut out, depth);
    }
    if let Some(max) = constraints.max_negatives {
        limit_negatives(&mut out, max, constraints.truncation, seed);
    }
    Ok(out)
}

fn limit_depth(tree: &mut CaptionTree, depth: usize) {
    if tree.levels.len() <= depth {
        return;
    }
    let cut = tree.levels.len() - depth;
    let dropped: Vec<TreeLevel> = tree.levels.drain(..cut).collect();
    for level in dropped {
        for negative in level.negatives {
            let source = level.positive_tokens[negative.replaced_index]
                .source
                .expect("negatives never replace connector words");
            let (target, position) = tree
                .levels
                .iter()
                .enumerate()
                .find_map(|(i, l)| l.position_of(source).map(|p| (i, p)))
                .expect("the full-caption level contains every original word");
            let retained = &mut tree.levels[target];
            retained.negatives.push(Negative {
                text: retained.render_with(position, &negative.replacement),
                replaced_index: position,
                ..negative
            });
        }
    }
    for level in &mut tree.levels {
        level.negatives.sort_by_key(|n| n.replaced_index);
    }
    tree.reindex();
}

fn limit_negatives(tree: &mut CaptionTree, max: usize, truncation: Truncation, seed: u64) {
    let total = tree.negative_count();
    if total <= max {
        return;
    }
    let keep: BTreeSet<usize> = match truncation {
        Truncation::Ordered => (0..max).collect(),
        Truncation::Seeded => {
            let mut rng = seed::rng_for(seed, &format!("truncate:{}", tree.caption_id));
            sample(&mut rng, total, max).into_iter().collect()
        }
    };
    let mut ordinal = 0;
    for level in &mut tree.levels {
        level.negatives.retain(|_| {
            let kept = keep.contains(&ordinal);
            ordinal += 1;
            kept
        });
    }
}
