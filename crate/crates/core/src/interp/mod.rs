//! Token Removal, Anchor texts, differential relevance (DiRe) and the
//! perturbation-curve protocol.

mod anchor;
mod export;
mod removal;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::scorer::{Embedding, ImageRef, RelevancyMap, Scorer, ScorerError};
use crate::Scalar;

pub use anchor::{anchor_text, AnchorText};
pub use export::{heatmap_json, heatmap_pgm};
pub use removal::{removal_count, remove_tokens, RemovalPlan};

#[derive(Debug, thiserror::Error)]
pub enum InterpError {
    #[error("positive and negative texts are identical: {0:?}")]
    IdenticalTexts(String),
    #[error("{pos:?} and {neg:?} do not differ in a single span on both sides")]
    Undiffable { pos: String, neg: String },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("relevancy maps belong to different images: {left:?} vs {right:?}")]
    ImageMismatch { left: String, right: String },
    #[error("removal fraction {0} is outside [0, 1]")]
    InvalidFraction(f64),
    #[error("removal fractions must be non-empty and strictly increasing")]
    UnorderedFractions,
    #[error("no records to evaluate")]
    EmptyDataset,
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

/// Elementwise `rel_pos - rel_neg`.
pub fn dire<T: Scalar>(rel_pos: &RelevancyMap<T>, rel_neg: &RelevancyMap<T>) -> Result<RelevancyMap<T>, InterpError> {
    if rel_pos.shape() != rel_neg.shape() {
        return Err(InterpError::ShapeMismatch {
            left: rel_pos.shape(),
            right: rel_neg.shape(),
        });
    }
    if rel_pos.image_id != rel_neg.image_id {
        return Err(InterpError::ImageMismatch {
            left: rel_pos.image_id.clone(),
            right: rel_neg.image_id.clone(),
        });
    }
    let (h, w) = rel_pos.shape();
    let diff = rel_pos
        .grid
        .values()
        .iter()
        .zip(rel_neg.grid.values())
        .map(|(a, b)| *a - *b)
        .collect();
    Ok(RelevancyMap::new(
        Grid::new(h, w, diff).expect("shapes checked"),
        rel_pos.image_id.clone(),
        format!("{} - {}", rel_pos.text, rel_neg.text),
    )?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemovalStrategy {
    /// Each text masks the image with its own relevancy map.
    PerText,
    /// One shared mask from the Anchor text's map.
    Anchor,
    /// One shared mask from the positive-minus-negative map.
    Dire,
}

impl RemovalStrategy {
    pub const ALL: [RemovalStrategy; 3] = [RemovalStrategy::PerText, RemovalStrategy::Anchor, RemovalStrategy::Dire];

    pub fn as_str(self) -> &'static str {
        match self {
            RemovalStrategy::PerText => "per-text",
            RemovalStrategy::Anchor => "anchor",
            RemovalStrategy::Dire => "dire",
        }
    }
}

impl fmt::Display for RemovalStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RemovalStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown removal strategy {s:?} (expected per-text, anchor or dire)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction<T> {
    pub choice: Choice,
    /// `positive_score - negative_score`.
    pub margin: T,
    pub positive_score: T,
    pub negative_score: T,
}

/// Positive only on a strict win; ties go to the negative.
pub fn choose<T: Scalar>(positive_score: T, negative_score: T) -> Prediction<T> {
    Prediction {
        choice: if positive_score > negative_score {
            Choice::Positive
        } else {
            Choice::Negative
        },
        margin: positive_score - negative_score,
        positive_score,
        negative_score,
    }
}

/// Cosine between a (masked) image and a text; an image with nothing left
/// to see scores 0 against every text.
fn masked_score<T: Scalar, S: Scorer<T> + ?Sized>(
    scorer: &S,
    image: &ImageRef,
    text: &Embedding<T>,
) -> Result<T, InterpError> {
    match scorer.embed_image(image) {
        Ok(e) => Ok(e.cosine(text)),
        Err(ScorerError::EmptyInput(_)) => Ok(T::zero()),
        Err(e) => Err(e.into()),
    }
}

fn strategy_maps<T: Scalar, S: Scorer<T> + ?Sized>(
    scorer: &S,
    image: &ImageRef,
    pos: &str,
    neg: &str,
    strategy: RemovalStrategy,
) -> Result<Vec<RelevancyMap<T>>, InterpError> {
    Ok(match strategy {
        RemovalStrategy::PerText => vec![scorer.relevancy(image, pos)?, scorer.relevancy(image, neg)?],
        RemovalStrategy::Anchor => vec![scorer.relevancy(image, &anchor_text(pos, neg)?.text)?],
        RemovalStrategy::Dire => vec![dire(&scorer.relevancy(image, pos)?, &scorer.relevancy(image, neg)?)?],
    })
}

/// Predictions for one image/text pair at each removal fraction. Relevancy
/// maps are computed once on the unmasked image.
pub fn predict_at<T: Scalar, S: Scorer<T> + ?Sized>(
    scorer: &S,
    image: &ImageRef,
    pos: &str,
    neg: &str,
    strategy: RemovalStrategy,
    fractions: &[f64],
) -> Result<Vec<Prediction<T>>, InterpError> {
    for &f in fractions {
        removal::check_fraction(f)?;
    }
    let maps = strategy_maps(scorer, image, pos, neg, strategy)?;
    let pos_text = scorer.embed_text(pos)?;
    let neg_text = scorer.embed_text(neg)?;
    fractions
        .iter()
        .map(|&f| {
            if let [pos_map, neg_map] = maps.as_slice() {
                let pos_image = remove_tokens(image, pos_map, f)?;
                let neg_image = remove_tokens(image, neg_map, f)?;
                Ok(choose(
                    masked_score(scorer, &pos_image, &pos_text)?,
                    masked_score(scorer, &neg_image, &neg_text)?,
                ))
            } else {
                let shared = remove_tokens(image, &maps[0], f)?;
                Ok(choose(
                    masked_score(scorer, &shared, &pos_text)?,
                    masked_score(scorer, &shared, &neg_text)?,
                ))
            }
        })
        .collect()
}

pub fn predict<T: Scalar, S: Scorer<T> + ?Sized>(
    scorer: &S,
    image: &ImageRef,
    pos: &str,
    neg: &str,
    strategy: RemovalStrategy,
    fraction: f64,
) -> Result<Prediction<T>, InterpError> {
    Ok(predict_at(scorer, image, pos, neg, strategy, &[fraction])?.remove(0))
}

/// One positive/negative pair on one image.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationCase {
    pub image: ImageRef,
    pub positive: String,
    pub negative: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPoint {
    pub strategy: RemovalStrategy,
    pub fraction: f64,
    pub accuracy: f64,
}

fn check_fractions(fractions: &[f64]) -> Result<(), InterpError> {
    for &f in fractions {
        removal::check_fraction(f)?;
    }
    if fractions.is_empty() || fractions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(InterpError::UnorderedFractions);
    }
    Ok(())
}

/// Per-case predictions (outer: cases in input order, inner: fractions).
pub fn perturbation_outcomes<T: Scalar, S: Scorer<T> + ?Sized>(
    scorer: &S,
    cases: &[PerturbationCase],
    strategy: RemovalStrategy,
    fractions: &[f64],
) -> Result<Vec<Vec<Prediction<T>>>, InterpError> {
    check_fractions(fractions)?;
    if cases.is_empty() {
        return Err(InterpError::EmptyDataset);
    }
    cases
        .par_iter()
        .map(|c| predict_at(scorer, &c.image, &c.positive, &c.negative, strategy, fractions))
        .collect()
}

/// Accuracy (share of cases predicted Positive) at each fraction.
pub fn perturbation_curve<T: Scalar, S: Scorer<T> + ?Sized>(
    scorer: &S,
    cases: &[PerturbationCase],
    strategy: RemovalStrategy,
    fractions: &[f64],
) -> Result<Vec<PerturbationPoint>, InterpError> {
    let outcomes = perturbation_outcomes(scorer, cases, strategy, fractions)?;
    Ok(curve_from_outcomes(&outcomes, strategy, fractions))
}

pub fn curve_from_outcomes<T>(
    outcomes: &[Vec<Prediction<T>>],
    strategy: RemovalStrategy,
    fractions: &[f64],
) -> Vec<PerturbationPoint> {
    fractions
        .iter()
        .enumerate()
        .map(|(i, &fraction)| {
            let hits = outcomes.iter().filter(|o| o[i].choice == Choice::Positive).count();
            PerturbationPoint {
                strategy,
                fraction,
                accuracy: hits as f64 / outcomes.len().max(1) as f64,
            }
        })
        .collect()
}

/// `strategy,fraction,accuracy` with a header row.
pub fn curve_csv(points: &[PerturbationPoint]) -> String {
    let mut out = String::from("strategy,fraction,accuracy\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.strategy, p.fraction, p.accuracy));
    }
    out
}
