//! Run configuration: defaults, overridden by a TOML file, overridden by flags.

use std::path::{Path, PathBuf};

use captree::interp::RemovalStrategy;
use captree::tree::Truncation;
use captree::{StrategyKind, TreeStructure};
use clap::Args;
use serde::Deserialize;

use crate::error::CliError;

pub const WORDNET_ENV: &str = "CAPTREE_WORDNET_DIR";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScorerSpec {
    Toy,
    Remote(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleSpec {
    None,
    Stub(PathBuf),
    Remote(String),
}

fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}

impl ScorerSpec {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "toy" => Ok(ScorerSpec::Toy),
            url if is_url(url) => Ok(ScorerSpec::Remote(url.to_string())),
            other => Err(CliError::Usage(format!(
                "scorer must be \"toy\" or an http(s) URL, got {other:?}"
            ))),
        }
    }
}

impl OracleSpec {
    fn parse(s: &str) -> Self {
        match s {
            "" | "none" => OracleSpec::None,
            url if is_url(url) => OracleSpec::Remote(url.to_string()),
            path => OracleSpec::Stub(PathBuf::from(path)),
        }
    }
}

/// Fully resolved settings shared by all subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub structure: TreeStructure,
    pub negatives: StrategyKind,
    pub connector: String,
    pub final_phrase_level: bool,
    pub max_depth: Option<usize>,
    pub max_negatives: Option<usize>,
    pub truncation: Truncation,
    pub co_hyponym_pool: usize,
    pub alpha: f64,
    pub temperature: f64,
    pub removal: RemovalStrategy,
    pub fractions: Vec<f64>,
    pub seed: u64,
    pub scorer: ScorerSpec,
    pub wordnet: Option<PathBuf>,
    pub oracle: OracleSpec,
    pub lexicon: Option<PathBuf>,
    pub expand_k: usize,
    pub workers: usize,
}

pub fn default_fractions() -> Vec<f64> {
    (0..=10).map(|i| f64::from(i) / 10.0).collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            structure: TreeStructure::Incremental,
            negatives: StrategyKind::Wn,
            connector: captree::tree::DEFAULT_CONNECTOR.to_string(),
            final_phrase_level: false,
            max_depth: None,
            max_negatives: None,
            truncation: Truncation::Ordered,
            co_hyponym_pool: captree::negatives::DEFAULT_CO_HYPONYM_POOL,
            alpha: 0.5,
            temperature: 1.0,
            removal: RemovalStrategy::Anchor,
            fractions: default_fractions(),
            seed: 0,
            scorer: ScorerSpec::Toy,
            wordnet: None,
            oracle: OracleSpec::None,
            lexicon: None,
            expand_k: 3,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

/// The config file: every key optional, unknown keys rejected.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub structure: Option<String>,
    pub negatives: Option<String>,
    pub connector: Option<String>,
    pub final_phrase_level: Option<bool>,
    pub max_depth: Option<usize>,
    pub max_negatives: Option<usize>,
    pub truncation: Option<Truncation>,
    pub co_hyponym_pool: Option<usize>,
    pub alpha: Option<f64>,
    pub temperature: Option<f64>,
    pub removal: Option<String>,
    pub fractions: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub scorer: Option<String>,
    pub wordnet: Option<PathBuf>,
    pub oracle: Option<String>,
    pub lexicon: Option<PathBuf>,
    pub expand_k: Option<usize>,
    pub workers: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Flags mirroring the config file keys.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML file with run settings (flags take precedence).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Tree structure: basic or incremental.
    #[arg(long)]
    pub structure: Option<String>,
    /// Negative strategy: wn, wn+llm or wn+llm+mask.
    #[arg(long)]
    pub negatives: Option<String>,
    /// Connector inserted between noun phrases.
    #[arg(long)]
    pub connector: Option<String>,
    /// Give a caption-final noun phrase its own level.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub final_phrase_level: Option<bool>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub max_negatives: Option<usize>,
    /// How max-negatives truncates: ordered or seeded.
    #[arg(long)]
    pub truncation: Option<String>,
    /// Co-hyponyms tried per word before falling through.
    #[arg(long)]
    pub co_hyponym_pool: Option<usize>,
    /// Tree-loss weight in (0, 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Logit multiplier for the losses and failure expansion.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Removal strategy: per-text, anchor or dire.
    #[arg(long)]
    pub removal: Option<String>,
    /// Comma-separated removal fractions, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// "toy" or the base URL of a scoring service.
    #[arg(long)]
    pub scorer: Option<String>,
    /// WordNet database directory (falls back to $CAPTREE_WORDNET_DIR).
    #[arg(long, value_name = "DIR")]
    pub wordnet: Option<PathBuf>,
    /// "none", a stub oracle JSON file, or the base URL of an oracle service.
    #[arg(long)]
    pub oracle: Option<String>,
    /// Extra tagger lexicon (word<TAB>TAG per line) overriding bundled entries.
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
    /// Related words per side when expanding a failure.
    #[arg(long)]
    pub expand_k: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
}

fn parse_with<T>(value: &str, what: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<T, CliError> {
    parse(value).map_err(|e| CliError::Usage(format!("{what}: {e}")))
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        resolve(self, file, std::env::var_os(WORDNET_ENV).map(PathBuf::from))
    }
}

/// Merges flag > file > default (> environment for the WordNet path).
pub fn resolve(args: &ConfigArgs, file: ConfigFile, wordnet_env: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let d = RunConfig::default();
    let pick = |flag: &Option<String>, file: Option<String>| flag.clone().or(file);

    let structure = match pick(&args.structure, file.structure) {
        Some(s) => parse_with(&s, "structure", |v| v.parse::<TreeStructure>())?,
        None => d.structure,
    };
    let negatives = match pick(&args.negatives, file.negatives) {
        Some(s) => parse_with(&s, "negatives", |v| v.parse::<StrategyKind>())?,
        None => d.negatives,
    };
    let truncation = match args.truncation.as_deref() {
        Some("ordered") => Truncation::Ordered,
        Some("seeded") => Truncation::Seeded,
        Some(other) => {
            return Err(CliError::Usage(format!(
                "truncation must be ordered or seeded, got {other:?}"
            )))
        }
        None => file.truncation.unwrap_or(d.truncation),
    };
    let removal = match pick(&args.removal, file.removal) {
        Some(s) => parse_with(&s, "removal", |v| v.parse::<RemovalStrategy>())?,
        None => d.removal,
    };
    let scorer = match pick(&args.scorer, file.scorer) {
        Some(s) => ScorerSpec::parse(&s)?,
        None => d.scorer,
    };
    let oracle = pick(&args.oracle, file.oracle).map_or(d.oracle, |s| OracleSpec::parse(&s));

    let cfg = RunConfig {
        structure,
        negatives,
        connector: pick(&args.connector, file.connector).unwrap_or(d.connector),
        final_phrase_level: args
            .final_phrase_level
            .or(file.final_phrase_level)
            .unwrap_or(d.final_phrase_level),
        max_depth: args.max_depth.or(file.max_depth),
        max_negatives: args.max_negatives.or(file.max_negatives),
        truncation,
        co_hyponym_pool: args
            .co_hyponym_pool
            .or(file.co_hyponym_pool)
            .unwrap_or(d.co_hyponym_pool),
        alpha: args.alpha.or(file.alpha).unwrap_or(d.alpha),
        temperature: args.temperature.or(file.temperature).unwrap_or(d.temperature),
        removal,
        fractions: args.fractions.clone().or(file.fractions).unwrap_or(d.fractions),
        seed: args.seed.or(file.seed).unwrap_or(d.seed),
        scorer,
        wordnet: args.wordnet.clone().or(file.wordnet).or(wordnet_env),
        oracle,
        lexicon: args.lexicon.clone().or(file.lexicon),
        expand_k: args.expand_k.or(file.expand_k).unwrap_or(d.expand_k),
        workers: args.workers.or(file.workers).unwrap_or(d.workers),
    };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return usage(format!("alpha must be in (0, 1), got {}", self.alpha));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return usage(format!("temperature must be positive, got {}", self.temperature));
        }
        if self.max_depth == Some(0) || self.max_negatives == Some(0) {
            return usage("max-depth and max-negatives must be at least 1".into());
        }
        if self.fractions.is_empty()
            || self.fractions.iter().any(|f| !(0.0..=1.0).contains(f))
            || self.fractions.windows(2).any(|w| w[0] >= w[1])
        {
            return usage(format!(
                "fractions must be strictly increasing values in [0, 1], got {:?}",
                self.fractions
            ));
        }
        if self.workers == 0 || self.co_hyponym_pool == 0 {
            return usage("workers and co-hyponym-pool must be at least 1".into());
        }
        Ok(())
    }

    pub fn loss_config(&self) -> captree::LossConfig<f64> {
        captree::LossConfig {
            alpha: self.alpha,
            temperature: self.temperature,
        }
    }

    pub fn tree_options(&self) -> captree::TreeOptions {
        captree::TreeOptions {
            connector: self.connector.clone(),
            final_phrase_level: self.final_phrase_level,
        }
    }

    pub fn constraints(&self) -> captree::TreeConstraints {
        captree::TreeConstraints {
            max_depth: self.max_depth,
            max_negatives: self.max_negatives,
            truncation: self.truncation,
        }
    }

    pub fn wordnet_dir(&self) -> Result<&Path, CliError> {
        self.wordnet
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("no WordNet directory: pass --wordnet or set {WORDNET_ENV}")))
    }
}
