use std::path::PathBuf;

use captree::negatives::{attach_negatives, NegativeStrategy};
use captree::record::TreeRecord;
use captree::{parse, seed, tree, CaptionTree};
use clap::Args;
use rayon::prelude::*;

use super::json_line;
use crate::config::{ConfigArgs, RunConfig};
use crate::error::CliError;
use crate::io;

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    /// Captions, one per line (`caption` or `id<TAB>caption`).
    #[arg(long, value_name = "FILE")]
    pub captions: PathBuf,
    /// Output tree JSONL.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

pub fn run(args: &BuildArgs) -> Result<(), CliError> {
    let cfg = args.config.resolve()?;
    let captions = io::parse_captions(&io::read_text(&args.captions)?);
    let trees = build_trees(&cfg, &captions).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", args.captions.display())),
        other => other,
    })?;
    let body: String = trees.iter().map(|t| json_line(&TreeRecord::from(t))).collect();
    io::write_atomic(&args.out, body.as_bytes())?;
    eprintln!("wrote {} trees to {}", trees.len(), args.out.display());
    Ok(())
}

/// Parses, builds, attaches negatives and constrains each `(line, id, caption)`.
pub fn build_trees(cfg: &RunConfig, captions: &[(usize, String, String)]) -> Result<Vec<CaptionTree>, CliError> {
    let mut ids = std::collections::BTreeSet::new();
    if let Some((line, id, _)) = captions.iter().find(|(_, id, _)| !ids.insert(id.as_str())) {
        return Err(CliError::Input(format!("line {line}: caption id {id:?} used twice")));
    }
    let store = super::wordnet(cfg)?;
    let tagger = super::tagger(cfg)?;
    let oracle = super::oracle(cfg)?;
    let strategy = NegativeStrategy::new(cfg.negatives, &store, oracle.as_deref(), cfg.seed)?
        .with_co_hyponym_pool(cfg.co_hyponym_pool);
    let options = cfg.tree_options();
    let constraints = cfg.constraints();
    let one = |(line, id, caption): &(usize, String, String)| -> Result<CaptionTree, CliError> {
        let at_line = |e: &dyn std::fmt::Display| CliError::Input(format!("line {line}: {e}"));
        let parsed = parse(caption, &tagger).map_err(|e| at_line(&e))?;
        let mut built = tree::build(&parsed, cfg.structure, &options)
            .map_err(|e| CliError::Usage(e.to_string()))?
            .with_id(id.clone());
        attach_negatives(&mut built, &strategy)?;
        tree::constrain(&built, &constraints, seed::derive(cfg.seed, &format!("constrain:{id}")))
            .map_err(|e| CliError::Usage(e.to_string()))
    };
    super::thread_pool(cfg)?.install(|| captions.par_iter().map(one).collect())
}
