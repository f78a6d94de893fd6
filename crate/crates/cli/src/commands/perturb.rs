use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use captree::interp::{
    anchor_text, curve_csv, dire, heatmap_json, heatmap_pgm, perturbation_curve, PerturbationCase, RemovalStrategy,
};
use captree::{EvalRecord, ImageRef, Scorer};
use clap::Args;

use crate::config::ConfigArgs;
use crate::error::CliError;
use crate::io;

#[derive(Debug, Clone, Args)]
pub struct PerturbArgs {
    /// Evaluation JSONL from eval.
    #[arg(long, value_name = "FILE")]
    pub eval: PathBuf,
    /// Image manifest JSONL.
    #[arg(long, value_name = "FILE")]
    pub images: PathBuf,
    /// Accuracy curve CSV.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Run every removal strategy instead of the configured one.
    #[arg(long)]
    pub all_strategies: bool,
    /// Directory for relevancy heatmaps (JSON and PGM) of one pair per caption.
    #[arg(long, value_name = "DIR")]
    pub heatmap_dir: Option<PathBuf>,
    /// Pixels per token in PGM heatmaps.
    #[arg(long, default_value_t = 8)]
    pub heatmap_scale: usize,
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// Reads evaluation records, checking each against a re-derivation from its
/// own tree and scores.
pub fn read_records(path: &Path) -> Result<Vec<EvalRecord<f64>>, CliError> {
    let records: Vec<EvalRecord<f64>> = io::read_jsonl(path)?;
    if records.is_empty() {
        return Err(CliError::input(path, "no evaluation records"));
    }
    for (i, record) in records.iter().enumerate() {
        let bad = |m: String| CliError::input(path, format!("record {}: {m}", i + 1));
        let tree = record.tree.to_tree().map_err(|e| bad(e.to_string()))?;
        let scores = record.levels.iter().map(|l| l.scores.clone()).collect();
        let derived = EvalRecord::from_scores(&tree, &record.image_id, scores).map_err(|e| bad(e.to_string()))?;
        if derived != *record {
            return Err(bad("choices or failure disagree with the stored scores".into()));
        }
    }
    Ok(records)
}

/// Looks up each record's image and checks it is the one that was evaluated.
pub fn record_images(
    records: &[EvalRecord<f64>],
    images: &BTreeMap<String, ImageRef>,
    manifest: &Path,
) -> Result<Vec<ImageRef>, CliError> {
    records
        .iter()
        .map(|r| {
            let image = io::image_for(images, &r.caption_id, manifest)?;
            if image.id != r.image_id {
                return Err(CliError::input(
                    manifest,
                    format!(
                        "caption {:?} was evaluated on {:?}, manifest has {:?}",
                        r.caption_id, r.image_id, image.id
                    ),
                ));
            }
            Ok(image.clone())
        })
        .collect()
}

/// Every (level positive, negative) pair of every record on its image.
pub fn cases(records: &[EvalRecord<f64>], images: &[ImageRef]) -> Vec<PerturbationCase> {
    records
        .iter()
        .zip(images)
        .flat_map(|(record, image)| {
            record.tree.levels.iter().flat_map(move |level| {
                level.negatives.iter().map(move |n| PerturbationCase {
                    image: image.clone(),
                    positive: level.positive.clone(),
                    negative: n.text.clone(),
                })
            })
        })
        .collect()
}

pub fn run(args: &PerturbArgs) -> Result<(), CliError> {
    let cfg = args.config.resolve()?;
    if args.heatmap_scale == 0 {
        return Err(CliError::Usage("heatmap-scale must be at least 1".into()));
    }
    let records = read_records(&args.eval)?;
    let images = record_images(&records, &io::read_manifest(&args.images)?, &args.images)?;
    let cases = cases(&records, &images);
    if cases.is_empty() {
        return Err(CliError::input(&args.eval, "no positive/negative pairs to perturb"));
    }
    let scorer = super::scorer(&cfg);
    let strategies: Vec<RemovalStrategy> = if args.all_strategies {
        RemovalStrategy::ALL.to_vec()
    } else {
        vec![cfg.removal]
    };
    let pool = super::thread_pool(&cfg)?;
    let mut points = Vec::new();
    for strategy in strategies {
        points.extend(pool.install(|| perturbation_curve(scorer.as_ref(), &cases, strategy, &cfg.fractions))?);
    }
    io::write_atomic(&args.out, curve_csv(&points).as_bytes())?;
    if let Some(dir) = &args.heatmap_dir {
        write_heatmaps(scorer.as_ref(), &records, &images, dir, args.heatmap_scale)?;
    }
    for p in &points {
        eprintln!("{:<9} {:>5.2} {:.4}", p.strategy.as_str(), p.fraction, p.accuracy);
    }
    Ok(())
}

/// The pair shown for a record: the winning negative at the failed level,
/// otherwise the first negative of the deepest level that has one.
fn heatmap_pair(record: &EvalRecord<f64>) -> Option<(&str, &str)> {
    let levels = &record.tree.levels;
    match &record.failure {
        Some(f) => Some((&levels[f.level].positive, &levels[f.level].negatives[f.negative].text)),
        None => levels
            .iter()
            .rev()
            .find_map(|l| l.negatives.first().map(|n| (l.positive.as_str(), n.text.as_str()))),
    }
}

pub fn write_heatmaps(
    scorer: &dyn Scorer<f64>,
    records: &[EvalRecord<f64>],
    images: &[ImageRef],
    dir: &Path,
    scale: usize,
) -> Result<(), CliError> {
    io::create_dir(dir)?;
    let mut used = BTreeSet::new();
    for (record, image) in records.iter().zip(images) {
        let Some((pos, neg)) = heatmap_pair(record) else {
            continue;
        };
        let mut stem = io::file_stem(&record.caption_id);
        let mut n = 1;
        while !used.insert(stem.clone()) {
            n += 1;
            stem = format!("{}~{n}", io::file_stem(&record.caption_id));
        }
        let rel_pos = scorer.relevancy(image, pos)?;
        let rel_neg = scorer.relevancy(image, neg)?;
        let rel_dire = dire(&rel_pos, &rel_neg)?;
        let rel_anchor = scorer.relevancy(image, &anchor_text(pos, neg)?.text)?;
        for (kind, map) in [
            ("pos", &rel_pos),
            ("neg", &rel_neg),
            ("dire", &rel_dire),
            ("anchor", &rel_anchor),
        ] {
            io::write_atomic(&dir.join(format!("{stem}.{kind}.json")), heatmap_json(map).as_bytes())?;
            io::write_atomic(
                &dir.join(format!("{stem}.{kind}.pgm")),
                heatmap_pgm(map, scale).as_bytes(),
            )?;
        }
    }
    Ok(())
}
