//! Failure analytics over evaluated trees: per-POS failure counts,
//! word-pair fail rates and failure-node expansion.

mod report;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::parse::PosTag;
use crate::record::{RecordError, TreeRecord};
use crate::scalar::softmax;
use crate::scorer::{ImageRef, Scorer, ScorerError};
use crate::tree::CaptionTree;
use crate::wordnet::{is_single_word, WordNetStore};
use crate::Scalar;

pub use report::{BiasReport, PosReport, BIAS_SCHEMA, POS_SCHEMA};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("record {0:?} has no failed level")]
    NoFailure(String),
    #[error("record {caption_id:?}: {message}")]
    Inconsistent { caption_id: String, message: String },
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

/// Scores of one level: index 0 is the positive, `i >= 1` is negative `i - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelOutcome<T> {
    pub scores: Vec<T>,
    pub chosen: usize,
}

/// The substitution that beat the positive at the failed level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Failure {
    pub level: usize,
    /// Index into that level's negatives.
    pub negative: usize,
    pub positive_word: String,
    pub negative_word: String,
    pub tag: PosTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalRecord<T> {
    pub caption_id: String,
    pub image_id: String,
    pub tree: TreeRecord,
    /// Every level is scored; analytics only look up to `failed_level`.
    pub levels: Vec<LevelOutcome<T>>,
    pub failed_level: Option<usize>,
    pub failure: Option<Failure>,
}

/// Index of the highest score. A negative that ties the positive wins, and
/// among tied negatives the first one does.
pub fn argmax_prefer_negative<T: Scalar>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if (best == 0 && *s >= scores[0]) || *s > scores[best] {
            best = i;
        }
    }
    best
}

impl<T: Scalar> EvalRecord<T> {
    /// Builds the record from per-level score vectors
    /// (`[positive, negative 0, negative 1, ...]`).
    pub fn from_scores(tree: &CaptionTree, image_id: &str, scores: Vec<Vec<T>>) -> Result<Self, AnalysisError> {
        let inconsistent = |message: String| AnalysisError::Inconsistent {
            caption_id: tree.caption_id.clone(),
            message,
        };
        if scores.len() != tree.levels.len() {
            return Err(inconsistent(format!(
                "{} score vectors for {} levels",
                scores.len(),
                tree.levels.len()
            )));
        }
        let mut levels = Vec::with_capacity(scores.len());
        let mut failure = None;
        for (level, scores) in tree.levels.iter().zip(scores) {
            if scores.len() != level.negatives.len() + 1 {
                return Err(inconsistent(format!(
                    "level {} has {} texts but {} scores",
                    level.level_index,
                    level.negatives.len() + 1,
                    scores.len()
                )));
            }
            let chosen = argmax_prefer_negative(&scores);
            if chosen != 0 && failure.is_none() {
                let negative = &level.negatives[chosen - 1];
                failure = Some(Failure {
                    level: level.level_index,
                    negative: chosen - 1,
                    positive_word: negative.replaced_word.clone(),
                    negative_word: negative.replacement.clone(),
                    tag: level.positive_tokens[negative.replaced_index].tag,
                });
            }
            levels.push(LevelOutcome { scores, chosen });
        }
        Ok(Self {
            caption_id: tree.caption_id.clone(),
            image_id: image_id.to_string(),
            tree: TreeRecord::from(tree),
            levels,
            failed_level: failure.as_ref().map(|f| f.level),
            failure,
        })
    }
}

impl<T> EvalRecord<T> {
    /// Levels up to and including the first failure.
    pub fn evaluated_levels(&self) -> usize {
        self.failed_level.map_or(self.levels.len(), |l| l + 1)
    }
}

/// Scores every level text of `tree` against `image`.
pub fn evaluate<T: Scalar, S: Scorer<T> + ?Sized>(
    scorer: &S,
    tree: &CaptionTree,
    image: &ImageRef,
) -> Result<EvalRecord<T>, AnalysisError> {
    let image_embedding = scorer.embed_image(image)?;
    let mut scores = Vec::with_capacity(tree.levels.len());
    for level in &tree.levels {
        let texts: Vec<String> = std::iter::once(level.positive.clone())
            .chain(level.negatives.iter().map(|n| n.text.clone()))
            .collect();
        let embeddings = scorer.embed_texts(&texts)?;
        scores.push(embeddings.iter().map(|e| image_embedding.cosine(e)).collect());
    }
    EvalRecord::from_scores(tree, &image.id, scores)
}

/// Row order of the failure-by-POS table.
pub const POS_TABLE_ORDER: [PosTag; 4] = [PosTag::Noun, PosTag::Adp, PosTag::Verb, PosTag::Adj];

/// Failed levels per POS of the replaced word. Every replaceable tag is
/// present, with zero when it never failed.
pub fn pos_failure_counts<T>(records: &[EvalRecord<T>]) -> BTreeMap<PosTag, usize> {
    let mut counts: BTreeMap<PosTag, usize> = POS_TABLE_ORDER.iter().map(|t| (*t, 0)).collect();
    for failure in records.iter().filter_map(|r| r.failure.as_ref()) {
        *counts.entry(failure.tag).or_default() += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub positive_word: String,
    pub negative_word: String,
    pub trials: usize,
    pub failures: usize,
    /// `failures / trials`; absent when there were no trials.
    pub fail_rate: Option<f64>,
}

/// For each `(positive, negative)` word pair: how many evaluated levels
/// offered that substitution, and at how many it won.
pub fn word_pair_fail_rates<T>(records: &[EvalRecord<T>], pairs: &[(String, String)]) -> Vec<BiasRow> {
    let mut tally: BTreeMap<(&str, &str), (usize, usize)> = BTreeMap::new();
    for record in records {
        for (index, level) in record.tree.levels.iter().take(record.evaluated_levels()).enumerate() {
            let offered: BTreeSet<(&str, &str)> = level
                .negatives
                .iter()
                .map(|n| (n.replaced_word.as_str(), n.replacement.as_str()))
                .collect();
            let lost_to = record
                .failure
                .as_ref()
                .filter(|f| f.level == index)
                .map(|f| (f.positive_word.as_str(), f.negative_word.as_str()));
            for pair in offered {
                let entry = tally.entry(pair).or_default();
                entry.0 += 1;
                if lost_to == Some(pair) {
                    entry.1 += 1;
                }
            }
        }
    }
    pairs
        .iter()
        .map(|(pos, neg)| {
            let (trials, failures) = tally.get(&(pos.as_str(), neg.as_str())).copied().unwrap_or_default();
            BiasRow {
                positive_word: pos.clone(),
                negative_word: neg.clone(),
                trials,
                failures,
                fail_rate: (trials > 0).then(|| failures as f64 / trials as f64),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateOrigin {
    Positive,
    Negative,
    PositiveSynonym,
    PositiveCoHyponym,
    NegativeSynonym,
    NegativeCoHyponym,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate<T> {
    pub text: String,
    pub word: String,
    pub origin: CandidateOrigin,
    pub score: T,
    pub probability: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion<T> {
    pub caption_id: String,
    pub level: usize,
    pub positive_word: String,
    pub negative_word: String,
    /// Sorted by descending probability.
    pub candidates: Vec<Candidate<T>>,
}

fn related_words(
    store: &WordNetStore,
    word: &str,
    tag: PosTag,
    k: usize,
    seed: u64,
    taken: &mut BTreeSet<String>,
    (synonym, co_hyponym): (CandidateOrigin, CandidateOrigin),
) -> Vec<(String, CandidateOrigin)> {
    let synonyms = store.synonyms(word, tag).unwrap_or_default();
    let co_hyponyms = store.co_hyponyms(word, tag, k, seed).unwrap_or_default();
    synonyms
        .into_iter()
        .map(|w| (w, synonym))
        .chain(co_hyponyms.into_iter().map(|w| (w, co_hyponym)))
        .filter(|(w, _)| is_single_word(w) && taken.insert(w.clone()))
        .take(k)
        .collect()
}

/// Re-scores the failed level with up to `k` synonyms/co-hyponyms of the
/// winning negative word and up to `k` of the positive word substituted in,
/// alongside the original pair. Probabilities are a softmax over
/// `temperature * score`.
pub fn expand_failure_node<T: Scalar, S: Scorer<T> + ?Sized>(
    record: &EvalRecord<T>,
    store: &WordNetStore,
    scorer: &S,
    image: &ImageRef,
    k: usize,
    seed: u64,
    temperature: T,
) -> Result<Expansion<T>, AnalysisError> {
    let failure = record
        .failure
        .as_ref()
        .ok_or_else(|| AnalysisError::NoFailure(record.caption_id.clone()))?;
    let tree = record.tree.to_tree()?;
    let level = tree
        .levels
        .get(failure.level)
        .ok_or_else(|| AnalysisError::Inconsistent {
            caption_id: record.caption_id.clone(),
            message: format!("failed level {} does not exist", failure.level),
        })?;
    let negative = level
        .negatives
        .get(failure.negative)
        .ok_or_else(|| AnalysisError::Inconsistent {
            caption_id: record.caption_id.clone(),
            message: format!("failed negative {} does not exist", failure.negative),
        })?;
    let position = negative.replaced_index;

    let mut taken: BTreeSet<String> = [failure.positive_word.clone(), failure.negative_word.clone()].into();
    let mut words = vec![
        (failure.positive_word.clone(), CandidateOrigin::Positive),
        (failure.negative_word.clone(), CandidateOrigin::Negative),
    ];
    words.extend(related_words(
        store,
        &failure.negative_word,
        failure.tag,
        k,
        seed,
        &mut taken,
        (CandidateOrigin::NegativeSynonym, CandidateOrigin::NegativeCoHyponym),
    ));
    words.extend(related_words(
        store,
        &failure.positive_word,
        failure.tag,
        k,
        seed,
        &mut taken,
        (CandidateOrigin::PositiveSynonym, CandidateOrigin::PositiveCoHyponym),
    ));

    let texts: Vec<String> = words.iter().map(|(w, _)| level.render_with(position, w)).collect();
    let image_embedding = scorer.embed_image(image)?;
    let scores: Vec<T> = scorer
        .embed_texts(&texts)?
        .iter()
        .map(|e| image_embedding.cosine(e))
        .collect();
    let logits: Vec<T> = scores.iter().map(|s| *s * temperature).collect();
    let probabilities = softmax(&logits);
    let mut candidates: Vec<Candidate<T>> = words
        .into_iter()
        .zip(texts)
        .zip(scores.into_iter().zip(probabilities))
        .map(|(((word, origin), text), (score, probability))| Candidate {
            text,
            word,
            origin,
            score,
            probability,
        })
        .collect();
    candidates.sort_by(|a, b| {
        b.probability
            .partial_cmp(&a.probability)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.text.cmp(&b.text))
    });
    Ok(Expansion {
        caption_id: record.caption_id.clone(),
        level: failure.level,
        positive_word: failure.positive_word.clone(),
        negative_word: failure.negative_word.clone(),
        candidates,
    })
}

#[cfg(test)]
mod tests;
