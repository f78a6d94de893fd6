use std::collections::BTreeSet;
use std::path::PathBuf;

use captree::analysis::{expand_failure_node, pos_failure_counts, word_pair_fail_rates};
use captree::analysis::{BiasReport, PosReport};
use captree::{seed, EvalRecord};
use clap::Args;

use super::{json_line, pretty_json};
use crate::config::ConfigArgs;
use crate::error::CliError;
use crate::io;

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Evaluation JSONL from eval.
    #[arg(long, value_name = "FILE")]
    pub eval: PathBuf,
    /// Word pairs to report (`positive<TAB>negative`); defaults to every pair offered.
    #[arg(long, value_name = "FILE")]
    pub pairs: Option<PathBuf>,
    /// Output directory for the reports.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Image manifest; when given, failed levels are expanded with related words.
    #[arg(long, value_name = "FILE")]
    pub images: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// Distinct (replaced word, replacement) pairs offered at evaluated levels.
pub fn observed_pairs(records: &[EvalRecord<f64>]) -> Vec<(String, String)> {
    let pairs: BTreeSet<(String, String)> = records
        .iter()
        .flat_map(|r| r.tree.levels.iter().take(r.evaluated_levels()))
        .flat_map(|l| {
            l.negatives
                .iter()
                .map(|n| (n.replaced_word.clone(), n.replacement.clone()))
        })
        .collect();
    pairs.into_iter().collect()
}

pub fn run(args: &AnalyzeArgs) -> Result<(), CliError> {
    let cfg = args.config.resolve()?;
    let records = super::perturb::read_records(&args.eval)?;
    let pairs = match &args.pairs {
        Some(path) => io::read_pairs(path)?,
        None => observed_pairs(&records),
    };
    let pos = PosReport::new(&pos_failure_counts(&records));
    let bias = BiasReport::new(word_pair_fail_rates(&records, &pairs));
    pos.validate().map_err(CliError::Input)?;
    bias.validate().map_err(CliError::Input)?;

    io::create_dir(&args.out_dir)?;
    let out = |name: &str| args.out_dir.join(name);
    io::write_atomic(&out("pos_failures.json"), pretty_json(&pos).as_bytes())?;
    io::write_atomic(&out("pos_failures.txt"), pos.to_text().as_bytes())?;
    io::write_atomic(&out("word_pairs.json"), pretty_json(&bias).as_bytes())?;
    io::write_atomic(&out("word_pairs.txt"), bias.to_text().as_bytes())?;

    if let Some(manifest) = &args.images {
        let store = super::wordnet(&cfg)?;
        let images = super::perturb::record_images(&records, &io::read_manifest(manifest)?, manifest)?;
        let scorer = super::scorer(&cfg);
        let mut body = String::new();
        for (record, image) in records.iter().zip(&images).filter(|(r, _)| r.failure.is_some()) {
            let key = format!("expand:{}", record.caption_id);
            let expansion = expand_failure_node(
                record,
                &store,
                scorer.as_ref(),
                image,
                cfg.expand_k,
                seed::derive(cfg.seed, &key),
                cfg.temperature,
            )?;
            body.push_str(&json_line(&expansion));
        }
        io::write_atomic(&out("expansions.jsonl"), body.as_bytes())?;
    }

    print!("{}\n{}", pos.to_text(), bias.to_text());
    Ok(())
}
