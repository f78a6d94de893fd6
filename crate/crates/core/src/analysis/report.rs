use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{BiasRow, POS_TABLE_ORDER};
use crate::parse::PosTag;

pub const POS_SCHEMA: &str = "captree.pos-failures.v1";
pub const BIAS_SCHEMA: &str = "captree.word-pair-fail-rates.v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosRow {
    pub tag: PosTag,
    pub failures: usize,
}

/// Failures per part of speech, one row per replaceable tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosReport {
    pub schema: String,
    pub rows: Vec<PosRow>,
    pub total_failed_levels: usize,
}

impl PosReport {
    pub fn new(counts: &BTreeMap<PosTag, usize>) -> Self {
        let rows: Vec<PosRow> = POS_TABLE_ORDER
            .iter()
            .map(|tag| PosRow {
                tag: *tag,
                failures: counts.get(tag).copied().unwrap_or(0),
            })
            .collect();
        Self {
            schema: POS_SCHEMA.to_string(),
            total_failed_levels: rows.iter().map(|r| r.failures).sum(),
            rows,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.schema != POS_SCHEMA {
            return Err(format!("unexpected schema {:?}", self.schema));
        }
        let tags: Vec<PosTag> = self.rows.iter().map(|r| r.tag).collect();
        if tags != POS_TABLE_ORDER {
            return Err(format!("rows must be NOUN, ADP, VERB, ADJ in that order, got {tags:?}"));
        }
        let sum: usize = self.rows.iter().map(|r| r.failures).sum();
        if sum != self.total_failed_levels {
            return Err(format!("rows sum to {sum}, total says {}", self.total_failed_levels));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<6} {:>9}", "POS", "failures");
        for row in &self.rows {
            let _ = writeln!(out, "{:<6} {:>9}", row.tag.as_str(), row.failures);
        }
        let _ = writeln!(out, "{:<6} {:>9}", "total", self.total_failed_levels);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasReport {
    pub schema: String,
    pub rows: Vec<BiasRow>,
}

impl BiasReport {
    pub fn new(rows: Vec<BiasRow>) -> Self {
        Self {
            schema: BIAS_SCHEMA.to_string(),
            rows,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.schema != BIAS_SCHEMA {
            return Err(format!("unexpected schema {:?}", self.schema));
        }
        for row in &self.rows {
            let pair = format!("{}/{}", row.positive_word, row.negative_word);
            if row.failures > row.trials {
                return Err(format!("{pair}: {} failures in {} trials", row.failures, row.trials));
            }
            let expected = (row.trials > 0).then(|| row.failures as f64 / row.trials as f64);
            if row.fail_rate != expected {
                return Err(format!("{pair}: fail_rate {:?} should be {expected:?}", row.fail_rate));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let pos_width = self
            .rows
            .iter()
            .map(|r| r.positive_word.len())
            .chain([8])
            .max()
            .unwrap_or(8);
        let neg_width = self
            .rows
            .iter()
            .map(|r| r.negative_word.len())
            .chain([8])
            .max()
            .unwrap_or(8);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<pos_width$} {:<neg_width$} {:>7} {:>8} {:>9}",
            "positive", "negative", "trials", "failures", "fail rate"
        );
        for row in &self.rows {
            let rate = row
                .fail_rate
                .map_or_else(|| "n/a".to_string(), |r| format!("{:.2}%", r * 100.0));
            let _ = writeln!(
                out,
                "{:<pos_width$} {:<neg_width$} {:>7} {:>8} {:>9}",
                row.positive_word, row.negative_word, row.trials, row.failures, rate
            );
        }
        out
    }
}
