//! Contrastive, per-level tree and blended losses over similarity logits.

use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::scalar::log_sum_exp;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LossError {
    #[error("target index {index} out of range for {len} logits")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("similarity matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("tree loss needs at least one level")]
    EmptyTree,
    #[error("logits must be finite")]
    NonFinite,
    #[error("invalid loss config: {0}")]
    InvalidConfig(String),
}

/// Scores of one image against every caption at a tree level: index 0 is
/// the positive, the rest are negatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelScores<T> {
    pub logits: Vec<T>,
}

impl<T: Scalar> LevelScores<T> {
    pub fn new(logits: Vec<T>) -> Result<Self, LossError> {
        if logits.is_empty() {
            return Err(LossError::IndexOutOfRange { index: 0, len: 0 });
        }
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(LossError::NonFinite);
        }
        Ok(Self { logits })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig<T> {
    /// Weight of the tree loss; the contrastive loss gets `1 - alpha`.
    pub alpha: T,
    /// Multiplier applied to every logit before the softmax.
    pub temperature: T,
}

impl<T: Scalar> Default for LossConfig<T> {
    fn default() -> Self {
        Self {
            alpha: T::of(0.5),
            temperature: T::one(),
        }
    }
}

impl<T: Scalar> LossConfig<T> {
    pub fn new(alpha: T, temperature: T) -> Result<Self, LossError> {
        let cfg = Self { alpha, temperature };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), LossError> {
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(LossError::InvalidConfig(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.temperature > T::zero() && self.temperature.is_finite()) {
            return Err(LossError::InvalidConfig(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Logits multiplied by the temperature.
    pub fn scale(&self, logits: &[T]) -> Vec<T> {
        logits.iter().map(|v| *v * self.temperature).collect()
    }
}

/// `-ln softmax(logits)[target]`, via a max-shifted log-sum-exp.
pub fn cross_entropy<T: Scalar>(logits: &[T], target: usize) -> Result<T, LossError> {
    if target >= logits.len() {
        return Err(LossError::IndexOutOfRange {
            index: target,
            len: logits.len(),
        });
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(LossError::NonFinite);
    }
    // clamp the last ulp of rounding so a dominant target never reports < 0
    Ok((log_sum_exp(logits) - logits[target]).max(T::zero()))
}

/// Mean of the row-wise (image to text) and column-wise (text to image)
/// cross entropies, with matched pairs on the diagonal.
pub fn contrastive_loss<T: Scalar>(scores: &Grid<T>) -> Result<T, LossError> {
    let (rows, cols) = scores.shape();
    if rows != cols {
        return Err(LossError::NonSquare { rows, cols });
    }
    let n = T::of(rows as f64);
    let mut image_loss = T::zero();
    let mut text_loss = T::zero();
    for i in 0..rows {
        image_loss = image_loss + cross_entropy(scores.row(i), i)?;
        text_loss = text_loss + cross_entropy(&scores.column(i), i)?;
    }
    Ok((image_loss / n + text_loss / n) / T::of(2.0))
}

/// Sum over levels of the cross entropy with the positive (index 0) as target.
pub fn tree_loss<T: Scalar>(levels: &[LevelScores<T>]) -> Result<T, LossError> {
    if levels.is_empty() {
        return Err(LossError::EmptyTree);
    }
    levels
        .iter()
        .map(|level| cross_entropy(&level.logits, 0))
        .try_fold(T::zero(), |acc, ce| Ok(acc + ce?))
}

/// `alpha * tree + (1 - alpha) * contrast`.
pub fn total_loss<T: Scalar>(tree: T, contrast: T, cfg: &LossConfig<T>) -> T {
    cfg.alpha * tree + (T::one() - cfg.alpha) * contrast
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown<T> {
    pub tree: T,
    pub contrastive: T,
    pub total: T,
}

/// All three losses for one batch, with the config's temperature applied
/// to the raw similarities first.
pub fn batch_loss<T: Scalar>(
    similarities: &Grid<T>,
    levels: &[LevelScores<T>],
    cfg: &LossConfig<T>,
) -> Result<LossBreakdown<T>, LossError> {
    cfg.validate()?;
    let scaled = Grid::new(
        similarities.rows(),
        similarities.cols(),
        cfg.scale(similarities.values()),
    )
    .expect("same shape as the input grid");
    let contrastive = contrastive_loss(&scaled)?;
    let scaled_levels: Vec<LevelScores<T>> = levels
        .iter()
        .map(|l| LevelScores {
            logits: cfg.scale(&l.logits),
        })
        .collect();
    let tree = tree_loss(&scaled_levels)?;
    Ok(LossBreakdown {
        tree,
        contrastive,
        total: total_loss(tree, contrastive, cfg),
    })
}
