//! Caption-tree augmentation for image-text models.
//!
//! Captions are parsed into noun phrases and rebuilt as a coarse-to-fine
//! tree of positive sub-captions ([`tree`]), each level paired with
//! one-word-replacement negatives ([`negatives`]) drawn from WordNet
//! ([`wordnet`]) and an optional word oracle. The numeric side covers the
//! contrastive and tree losses ([`loss`]), relevancy-map tooling for Token
//! Removal, Anchor and DiRe ([`interp`]) and failure analytics
//! ([`analysis`]), all generic over the scalar type.

pub mod analysis;
pub mod grid;
pub mod interp;
pub mod loss;
pub mod negatives;
pub mod parse;
pub mod record;
pub mod remote;
pub mod scalar;
pub mod scorer;
pub mod seed;
pub mod tree;
pub mod wordnet;

#[cfg(test)]
pub(crate) mod testing;

pub use analysis::EvalRecord;
pub use grid::{Cell, Grid};
pub use interp::{Prediction, RemovalStrategy};
pub use loss::{LevelScores, LossConfig};
pub use negatives::{Negative, NegativeSource, NegativeStrategy, StrategyKind, WordOracle};
pub use parse::{parse, tokenize, NounPhrase, ParseError, ParsedCaption, PosTag, Tagger, Token};
pub use scalar::Scalar;
pub use scorer::{Embedding, ImageRef, RelevancyMap, Scorer, SimilarityMatrix, ToyImage, ToyScorer};
pub use tree::{CaptionTree, TreeConstraints, TreeLevel, TreeOptions, TreeStructure};
pub use wordnet::WordNetStore;

pub type Grid32 = Grid<f32>;
pub type Grid64 = Grid<f64>;
pub type Embedding32 = Embedding<f32>;
pub type Embedding64 = Embedding<f64>;
pub type RelevancyMap32 = RelevancyMap<f32>;
pub type RelevancyMap64 = RelevancyMap<f64>;
pub type SimilarityMatrix32 = SimilarityMatrix<f32>;
pub type SimilarityMatrix64 = SimilarityMatrix<f64>;
pub type LossConfig32 = LossConfig<f32>;
pub type LossConfig64 = LossConfig<f64>;
pub type LevelScores32 = LevelScores<f32>;
pub type LevelScores64 = LevelScores<f64>;
pub type Prediction32 = Prediction<f32>;
pub type Prediction64 = Prediction<f64>;
pub type EvalRecord32 = EvalRecord<f32>;
pub type EvalRecord64 = EvalRecord<f64>;
