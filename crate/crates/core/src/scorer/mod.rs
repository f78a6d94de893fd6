//! Image-text scoring: embeddings, similarity matrices and relevancy maps.
//!
//! [`Scorer`] abstracts the vision-language model. [`ToyScorer`] is an
//! embedded deterministic bag-of-concepts model over [`ToyImage`] grids;
//! [`RemoteScorer`] talks to an inference service over HTTP.

mod remote;
mod toy;

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::grid::{Cell, Grid, GridError};
use crate::remote::RemoteError;
use crate::Scalar;

pub use remote::RemoteScorer;
pub use toy::{ToyScorer, TOY_DIMENSION};

#[derive(Debug, thiserror::Error)]
pub enum ScorerError {
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("remote scorer unavailable: {0}")]
    RemoteUnavailable(#[from] RemoteError),
    #[error("scorer protocol violation: {0}")]
    Protocol(String),
    #[error("unsupported image for this scorer: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Unit-length embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding<T> {
    values: Vec<T>,
}

impl<T: Scalar> Embedding<T> {
    /// Normalizes `raw` to unit L2 norm. Fails on empty, zero or non-finite input.
    pub fn from_raw(raw: Vec<T>) -> Result<Self, ScorerError> {
        let norm = raw.iter().map(|v| *v * *v).sum::<T>().sqrt();
        if raw.is_empty() || !norm.is_finite() || norm <= T::zero() {
            return Err(ScorerError::EmptyInput(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        Ok(Self {
            values: raw.into_iter().map(|v| v / norm).collect(),
        })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> T {
        self.values.iter().map(|v| *v * *v).sum::<T>().sqrt()
    }

    /// Cosine similarity, clamped to `[-1, 1]` against rounding.
    pub fn cosine(&self, other: &Self) -> T {
        assert_eq!(self.dim(), other.dim(), "embedding dimensions differ");
        let dot: T = self.values.iter().zip(&other.values).map(|(a, b)| *a * *b).sum();
        dot.max(-T::one()).min(T::one())
    }
}

/// Offline stand-in for a pixel image: one concept string per image token,
/// empty strings for background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyImage {
    pub id: String,
    pub grid: Grid<String>,
}

impl ToyImage {
    pub fn new(id: impl Into<String>, rows: Vec<Vec<&str>>) -> Result<Self, GridError> {
        Ok(Self {
            id: id.into(),
            grid: Grid::from_rows(
                rows.into_iter()
                    .map(|r| r.into_iter().map(String::from).collect())
                    .collect(),
            )?,
        })
    }

    /// Copy with the given cells blanked.
    pub fn blank(&self, cells: &BTreeSet<Cell>) -> ToyImage {
        let mut grid = self.grid.clone();
        for cell in cells {
            grid.set(*cell, String::new());
        }
        ToyImage {
            id: self.id.clone(),
            grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImageSource {
    Toy(ToyImage),
    Path(PathBuf),
    Base64(String),
}

/// An image plus the set of tokens removed from it.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRef {
    pub id: String,
    pub source: ImageSource,
    pub removed: BTreeSet<Cell>,
}

impl ImageRef {
    pub fn toy(image: ToyImage) -> Self {
        Self {
            id: image.id.clone(),
            source: ImageSource::Toy(image),
            removed: BTreeSet::new(),
        }
    }

    pub fn path(id: impl Into<String>, path: impl Into<PathBuf>) -> Self {
        Self {
            id: id.into(),
            source: ImageSource::Path(path.into()),
            removed: BTreeSet::new(),
        }
    }

    /// Token grid shape, when the scorer-independent source knows it.
    pub fn shape(&self) -> Option<(usize, usize)> {
        match &self.source {
            ImageSource::Toy(image) => Some(image.grid.shape()),
            _ => None,
        }
    }

    pub fn with_removed(&self, removed: BTreeSet<Cell>) -> Self {
        Self {
            removed,
            ..self.clone()
        }
    }

    /// The toy grid as seen by the model: removed cells blanked.
    pub fn visible_toy(&self) -> Option<ToyImage> {
        match &self.source {
            ImageSource::Toy(image) => Some(image.blank(&self.removed)),
            _ => None,
        }
    }
}

impl From<ToyImage> for ImageRef {
    fn from(image: ToyImage) -> Self {
        Self::toy(image)
    }
}

/// Pairwise image-text cosine similarities; rows are images, columns texts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix<T> {
    pub scores: Grid<T>,
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
}

/// Per-image-token relevance of `text` for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevancyMap<T> {
    pub grid: Grid<T>,
    pub image_id: String,
    pub text: String,
}

impl<T: Scalar> RelevancyMap<T> {
    pub fn new(grid: Grid<T>, image_id: impl Into<String>, text: impl Into<String>) -> Result<Self, ScorerError> {
        if grid.values().iter().any(|v| !v.is_finite()) {
            return Err(ScorerError::Protocol("relevancy map contains non-finite values".into()));
        }
        Ok(Self {
            grid,
            image_id: image_id.into(),
            text: text.into(),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.grid.shape()
    }
}

pub trait Scorer<T: Scalar>: Send + Sync {
    fn embed_text(&self, text: &str) -> Result<Embedding<T>, ScorerError>;

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Embedding<T>>, ScorerError> {
        texts.iter().map(|t| self.embed_text(t)).collect()
    }

    fn embed_image(&self, image: &ImageRef) -> Result<Embedding<T>, ScorerError>;

    fn relevancy(&self, image: &ImageRef, text: &str) -> Result<RelevancyMap<T>, ScorerError>;
}

impl<T: Scalar, S: Scorer<T> + ?Sized> Scorer<T> for &S {
    fn embed_text(&self, text: &str) -> Result<Embedding<T>, ScorerError> {
        (**self).embed_text(text)
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Embedding<T>>, ScorerError> {
        (**self).embed_texts(texts)
    }

    fn embed_image(&self, image: &ImageRef) -> Result<Embedding<T>, ScorerError> {
        (**self).embed_image(image)
    }

    fn relevancy(&self, image: &ImageRef, text: &str) -> Result<RelevancyMap<T>, ScorerError> {
        (**self).relevancy(image, text)
    }
}

/// `scores[j][k] = cosine(embed_image(images[j]), embed_text(texts[k]))`.
pub fn similarity_matrix<T: Scalar, S: Scorer<T> + ?Sized>(
    scorer: &S,
    images: &[ImageRef],
    texts: &[String],
) -> Result<SimilarityMatrix<T>, ScorerError> {
    if images.is_empty() || texts.is_empty() {
        return Err(ScorerError::EmptyInput(
            "similarity matrix needs images and texts".into(),
        ));
    }
    let text_embeddings = scorer.embed_texts(texts)?;
    let image_embeddings = images
        .iter()
        .map(|i| scorer.embed_image(i))
        .collect::<Result<Vec<_>, _>>()?;
    let scores = Grid::from_fn(images.len(), texts.len(), |(j, k)| {
        image_embeddings[j].cosine(&text_embeddings[k])
    })?;
    Ok(SimilarityMatrix {
        scores,
        row_ids: images.iter().map(|i| i.id.clone()).collect(),
        col_ids: texts.to_vec(),
    })
}

#[cfg(test)]
mod tests;
