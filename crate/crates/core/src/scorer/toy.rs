use rand::Rng;

use super::{Embedding, ImageRef, RelevancyMap, Scorer, ScorerError};
use crate::grid::Grid;
use crate::parse::normalize;
use crate::{seed, Scalar};

pub const TOY_DIMENSION: usize = 64;

/// Deterministic bag-of-concepts scorer.
///
/// Every word maps to a seeded random vector; a text or a cell concept is the
/// normalized mean of its word vectors, and an image is the normalized mean
/// of its visible, non-empty cell embeddings. Only [`ToyImage`](super::ToyImage)
/// sources are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToyScorer {
    seed: u64,
    dim: usize,
}

impl ToyScorer {
    pub fn new(seed: u64) -> Self {
        Self::with_dimension(seed, TOY_DIMENSION)
    }

    pub fn with_dimension(seed: u64, dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { seed, dim }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn word_vector(&self, word: &str) -> impl Iterator<Item = f64> {
        let mut rng = seed::rng_for(self.seed, &format!("toy-word:{word}"));
        (0..self.dim).map(move |_| rng.gen_range(-1.0..1.0))
    }

    fn phrase<T: Scalar>(&self, text: &str) -> Result<Embedding<T>, ScorerError> {
        let normalized = normalize(text);
        let words: Vec<&str> = normalized.split(' ').filter(|w| !w.is_empty()).collect();
        if words.is_empty() {
            return Err(ScorerError::EmptyInput(format!("no words in {text:?}")));
        }
        let mut sum = vec![0.0f64; self.dim];
        for word in words {
            let raw: Vec<f64> = self.word_vector(word).collect();
            let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (acc, v) in sum.iter_mut().zip(raw) {
                *acc += v / norm;
            }
        }
        Embedding::from_raw(sum.into_iter().map(T::of).collect())
    }

    fn visible_cells(&self, image: &ImageRef) -> Result<Grid<String>, ScorerError> {
        image
            .visible_toy()
            .map(|toy| toy.grid)
            .ok_or_else(|| ScorerError::Unsupported(format!("image {} is not a toy grid", image.id)))
    }
}

impl<T: Scalar> Scorer<T> for ToyScorer {
    fn embed_text(&self, text: &str) -> Result<Embedding<T>, ScorerError> {
        self.phrase(text)
    }

    fn embed_image(&self, image: &ImageRef) -> Result<Embedding<T>, ScorerError> {
        let grid = self.visible_cells(image)?;
        let mut sum = vec![T::zero(); self.dim];
        let mut any = false;
        for (_, concept) in grid.cells() {
            if normalize(concept).is_empty() {
                continue;
            }
            let cell: Embedding<T> = self.phrase(concept)?;
            for (acc, v) in sum.iter_mut().zip(cell.values()) {
                *acc = *acc + *v;
            }
            any = true;
        }
        if !any {
            return Err(ScorerError::EmptyInput(format!(
                "image {} has no visible cells",
                image.id
            )));
        }
        Embedding::from_raw(sum)
    }

    fn relevancy(&self, image: &ImageRef, text: &str) -> Result<RelevancyMap<T>, ScorerError> {
        let grid = self.visible_cells(image)?;
        let target: Embedding<T> = self.phrase(text)?;
        let mut values = Vec::with_capacity(grid.len());
        for (_, concept) in grid.cells() {
            if normalize(concept).is_empty() {
                values.push(T::zero());
            } else {
                values.push(self.phrase::<T>(concept)?.cosine(&target));
            }
        }
        RelevancyMap::new(Grid::new(grid.rows(), grid.cols(), values)?, image.id.clone(), text)
    }
}
