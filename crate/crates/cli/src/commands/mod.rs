//! Subcommand implementations and the resources they share.

pub mod analyze;
pub mod build;
pub mod eval;
pub mod perturb;

use captree::negatives::{RemoteOracle, StubOracle};
use captree::scorer::RemoteScorer;
use captree::{Scorer, Tagger, ToyScorer, WordNetStore, WordOracle};

use crate::config::{OracleSpec, RunConfig, ScorerSpec};
use crate::error::CliError;

pub fn thread_pool(cfg: &RunConfig) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cfg.workers)))
}

pub fn scorer(cfg: &RunConfig) -> Box<dyn Scorer<f64>> {
    match &cfg.scorer {
        ScorerSpec::Toy => Box::new(ToyScorer::new(cfg.seed)),
        ScorerSpec::Remote(url) => Box::new(RemoteScorer::connect(url)),
    }
}

pub fn wordnet(cfg: &RunConfig) -> Result<WordNetStore, CliError> {
    let dir = cfg.wordnet_dir()?;
    WordNetStore::load(dir).map_err(|e| CliError::input(dir, e))
}

pub fn tagger(cfg: &RunConfig) -> Result<Tagger, CliError> {
    let bundled = Tagger::bundled();
    match &cfg.lexicon {
        Some(path) => {
            let extra = Tagger::from_file(path).map_err(|e| CliError::input(path, e))?;
            Ok(bundled.with_overrides(&extra))
        }
        None => Ok(bundled),
    }
}

pub fn oracle(cfg: &RunConfig) -> Result<Option<Box<dyn WordOracle>>, CliError> {
    Ok(match &cfg.oracle {
        OracleSpec::None => None,
        OracleSpec::Stub(path) => Some(Box::new(
            StubOracle::from_file(path).map_err(|e| CliError::input(path, e))?,
        )),
        OracleSpec::Remote(url) => Some(Box::new(RemoteOracle::connect(url))),
    })
}

pub fn json_line<T: serde::Serialize>(value: &T) -> String {
    let mut line = serde_json::to_string(value).expect("records always serialize");
    line.push('\n');
    line
}

pub fn pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports always serialize");
    text.push('\n');
    text
}
