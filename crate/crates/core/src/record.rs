//! JSONL wire format for caption trees.
//!
//! One object per line:
//!
//! ```json
//! {"caption_id": "0", "caption": "...", "structure": "incremental", "connector": "and",
//!  "tags": ["ADJ", "NOUN", ...],
//!  "levels": [{"positive": "...", "sources": [0, 1, null, 4],
//!              "negatives": [{"text": "...", "replaced_index": 0, "replaced_word": "...",
//!                             "replacement": "...", "source": "antonym"}]}]}
//! ```
//!
//! `sources` maps each level token to its original-caption index (`null` for
//! connector words); together with `tags` it makes decoding lossless.

use serde::{Deserialize, Serialize};

use crate::negatives::Negative;
use crate::parse::{ParseError, ParsedCaption, PosTag};
use crate::tree::{CaptionTree, TreeError, TreeStructure};

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("invalid tree record JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("inconsistent tree record {caption_id:?}: {message}")]
    Inconsistent { caption_id: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelRecord {
    pub positive: String,
    pub sources: Vec<Option<usize>>,
    pub negatives: Vec<Negative>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeRecord {
    pub caption_id: String,
    pub caption: String,
    pub structure: TreeStructure,
    pub connector: String,
    pub tags: Vec<PosTag>,
    pub levels: Vec<LevelRecord>,
}

impl From<&CaptionTree> for TreeRecord {
    fn from(tree: &CaptionTree) -> Self {
        Self {
            caption_id: tree.caption_id.clone(),
            caption: tree.source.raw.clone(),
            structure: tree.structure,
            connector: tree.connector.clone(),
            tags: tree.source.tags.clone(),
            levels: tree
                .levels
                .iter()
                .map(|l| LevelRecord {
                    positive: l.positive.clone(),
                    sources: l.sources(),
                    negatives: l.negatives.clone(),
                })
                .collect(),
        }
    }
}

impl TreeRecord {
    pub fn to_tree(&self) -> Result<CaptionTree, RecordError> {
        let inconsistent = |message: String| RecordError::Inconsistent {
            caption_id: self.caption_id.clone(),
            message,
        };
        if self.levels.is_empty() {
            return Err(inconsistent("no levels".into()));
        }
        let source = ParsedCaption::from_tags(&self.caption, self.tags.clone())?;
        let levels = self
            .levels
            .iter()
            .map(|l| (l.sources.clone(), l.negatives.clone()))
            .collect();
        let tree = CaptionTree::from_level_sources(source, self.structure, &self.connector, levels)?
            .with_id(self.caption_id.clone());
        for (level, stored) in tree.levels.iter().zip(&self.levels) {
            if level.positive != stored.positive {
                return Err(inconsistent(format!(
                    "level {} positive {:?} does not match its sources ({:?})",
                    level.level_index, stored.positive, level.positive
                )));
            }
            for n in &level.negatives {
                let token = level
                    .positive_tokens
                    .get(n.replaced_index)
                    .ok_or_else(|| inconsistent(format!("negative {:?} replaces a token past the end", n.text)))?;
                if token.text != n.replaced_word || level.render_with(n.replaced_index, &n.replacement) != n.text {
                    return Err(inconsistent(format!(
                        "negative {:?} is not a one-word edit of {:?}",
                        n.text, level.positive
                    )));
                }
            }
        }
        Ok(tree)
    }
}

pub fn to_jsonl_line(tree: &CaptionTree) -> String {
    serde_json::to_string(&TreeRecord::from(tree)).expect("tree records always serialize")
}

pub fn from_jsonl_line(line: &str) -> Result<CaptionTree, RecordError> {
    serde_json::from_str::<TreeRecord>(line)?.to_tree()
}
