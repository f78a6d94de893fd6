use std::path::{Path, PathBuf};

use captree::analysis::PosReport;
use captree::analysis::{evaluate, pos_failure_counts};
use captree::loss::{contrastive_loss, total_loss, tree_loss};
use captree::record::from_jsonl_line;
use captree::scorer::similarity_matrix;
use captree::{CaptionTree, EvalRecord, LevelScores, LossConfig, Scorer};
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{json_line, pretty_json};
use crate::config::ConfigArgs;
use crate::error::CliError;
use crate::io;

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Tree JSONL from build-tree.
    #[arg(long, value_name = "FILE")]
    pub trees: PathBuf,
    /// Image manifest JSONL.
    #[arg(long, value_name = "FILE")]
    pub images: PathBuf,
    /// Per-caption evaluation JSONL.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Summary JSON (losses, per-level accuracy, failures by part of speech).
    #[arg(long, value_name = "FILE")]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    /// Mean tree loss per caption.
    pub tree: f64,
    /// Image-to-full-caption contrastive loss over the whole set.
    pub contrastive: f64,
    pub total: f64,
    pub alpha: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelAccuracy {
    pub level: usize,
    pub scored: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub records: usize,
    pub failed_records: usize,
    pub loss: LossSummary,
    pub level_accuracy: Vec<LevelAccuracy>,
    pub pos_failures: PosReport,
}

pub fn read_trees(path: &Path) -> Result<Vec<CaptionTree>, CliError> {
    let text = io::read_text(path)?;
    io::jsonl_lines(&text)
        .map(|(n, line)| from_jsonl_line(line).map_err(|e| CliError::input(path, format!("line {n}: {e}"))))
        .collect()
}

pub fn run(args: &EvalArgs) -> Result<(), CliError> {
    let cfg = args.config.resolve()?;
    let trees = read_trees(&args.trees)?;
    if trees.is_empty() {
        return Err(CliError::input(&args.trees, "no tree records"));
    }
    let images = io::read_manifest(&args.images)?;
    let pairs = trees
        .iter()
        .map(|t| Ok((t, io::image_for(&images, &t.caption_id, &args.images)?.clone())))
        .collect::<Result<Vec<_>, CliError>>()?;
    let scorer = super::scorer(&cfg);
    let records: Vec<EvalRecord<f64>> = super::thread_pool(&cfg)?.install(|| {
        pairs
            .par_iter()
            .map(|(tree, image)| evaluate(scorer.as_ref(), tree, image).map_err(CliError::from))
            .collect::<Result<_, _>>()
    })?;
    let body: String = records.iter().map(json_line).collect();
    io::write_atomic(&args.out, body.as_bytes())?;

    let images: Vec<_> = pairs.iter().map(|(_, image)| image.clone()).collect();
    let summary = summarize(scorer.as_ref(), &records, &images, &cfg.loss_config())?;
    if let Some(path) = &args.summary {
        io::write_atomic(path, pretty_json(&summary).as_bytes())?;
    }
    eprintln!(
        "evaluated {} captions, {} failed; loss tree {:.6} contrastive {:.6} total {:.6}",
        summary.records, summary.failed_records, summary.loss.tree, summary.loss.contrastive, summary.loss.total
    );
    Ok(())
}

/// Aggregates records whose images are `images` (same order).
pub fn summarize(
    scorer: &dyn Scorer<f64>,
    records: &[EvalRecord<f64>],
    images: &[captree::ImageRef],
    cfg: &LossConfig<f64>,
) -> Result<EvalSummary, CliError> {
    let loss_err = |e: captree::loss::LossError| CliError::Input(e.to_string());
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let mut tree_sum = 0.0;
    for record in records {
        let levels: Vec<LevelScores<f64>> = record
            .levels
            .iter()
            .map(|l| LevelScores {
                logits: cfg.scale(&l.scores),
            })
            .collect();
        tree_sum += tree_loss(&levels).map_err(loss_err)?;
    }
    let tree = tree_sum / records.len() as f64;
    let captions: Vec<String> = records.iter().map(|r| r.tree.caption.clone()).collect();
    let sims = similarity_matrix(scorer, images, &captions)?;
    let scaled = captree::Grid::new(sims.scores.rows(), sims.scores.cols(), cfg.scale(sims.scores.values()))
        .expect("same shape");
    let contrastive = contrastive_loss(&scaled).map_err(loss_err)?;

    let depth = records.iter().map(|r| r.levels.len()).max().unwrap_or(0);
    let level_accuracy = (0..depth)
        .map(|level| {
            let scored: Vec<_> = records.iter().filter_map(|r| r.levels.get(level)).collect();
            let correct = scored.iter().filter(|l| l.chosen == 0).count();
            LevelAccuracy {
                level,
                scored: scored.len(),
                correct,
                accuracy: correct as f64 / scored.len() as f64,
            }
        })
        .collect();

    Ok(EvalSummary {
        records: records.len(),
        failed_records: records.iter().filter(|r| r.failure.is_some()).count(),
        loss: LossSummary {
            tree,
            contrastive,
            total: total_loss(tree, contrastive, cfg),
            alpha: cfg.alpha,
            temperature: cfg.temperature,
        },
        level_accuracy,
        pos_failures: PosReport::new(&pos_failure_counts(records)),
    })
}
