//! Line parsers for the database files.
//!
//! Framing is checked strictly (offsets, counts, gloss separator); fields
//! the store does not use (lex ids, verb frames, glosses) are skipped.

use std::collections::BTreeMap;
use std::path::Path;

use super::{Synset, SynsetId, WnPos, WordNetError};

#[derive(Debug, Clone, Copy)]
pub(super) struct AntonymPointer {
    pub target: SynsetId,
    pub source_word: usize,
    pub target_word: usize,
}

pub(super) struct DataRecord {
    pub synset: Synset,
    pub antonyms: Vec<AntonymPointer>,
}

pub(super) struct IndexEntry {
    pub lemma: String,
    pub synsets: Vec<SynsetId>,
    pub line_offset: u64,
}

/// Yields `(byte_offset, line)` for every non-header line.
fn records(text: &str) -> impl Iterator<Item = (u64, &str)> {
    let mut offset = 0u64;
    text.split_inclusive('\n').filter_map(move |raw| {
        let at = offset;
        offset += raw.len() as u64;
        let line = raw.trim_end_matches(['\n', '\r']);
        if line.is_empty() || line.starts_with("  ") {
            None
        } else {
            Some((at, line))
        }
    })
}

struct Fields<'a> {
    iter: std::str::SplitAsciiWhitespace<'a>,
    file: &'a Path,
    offset: u64,
}

impl<'a> Fields<'a> {
    fn malformed(&self, message: impl Into<String>) -> WordNetError {
        WordNetError::MalformedRecord {
            file: self.file.to_path_buf(),
            offset: self.offset,
            message: message.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<&'a str, WordNetError> {
        self.iter
            .next()
            .ok_or_else(|| self.malformed(format!("record ends before {what}")))
    }

    fn number(&mut self, what: &str, radix: u32) -> Result<u64, WordNetError> {
        let raw = self.next(what)?;
        u64::from_str_radix(raw, radix).map_err(|_| self.malformed(format!("bad {what} {raw:?}")))
    }
}

fn clean_lemma(word: &str) -> String {
    // adjective syntactic markers: "(a)", "(p)", "(ip)"
    let word = match word.find('(') {
        Some(i) if word.ends_with(')') => &word[..i],
        _ => word,
    };
    word.to_lowercase()
}

pub(super) fn parse_data(path: &Path, text: &str, file_pos: WnPos) -> Result<Vec<DataRecord>, WordNetError> {
    let mut out = Vec::new();
    for (offset, line) in records(text) {
        let (body, _gloss) = line.split_once('|').ok_or_else(|| WordNetError::MalformedRecord {
            file: path.to_path_buf(),
            offset,
            message: "missing gloss separator".into(),
        })?;
        let mut fields = Fields {
            iter: body.split_ascii_whitespace(),
            file: path,
            offset,
        };
        let declared = fields.number("synset offset", 10)?;
        if declared != offset {
            return Err(fields.malformed(format!("declared offset {declared} does not match position")));
        }
        fields.next("lex_filenum")?;
        let ss_type = fields.next("ss_type")?;
        let pos = WnPos::from_char(ss_type).ok_or_else(|| fields.malformed(format!("bad ss_type {ss_type:?}")))?;
        if pos != file_pos {
            return Err(fields.malformed(format!("ss_type {ss_type:?} in {file_pos} file")));
        }
        let id = SynsetId { offset, pos };
        let word_count = fields.number("w_cnt", 16)?;
        if word_count == 0 {
            return Err(fields.malformed("synset without lemmas"));
        }
        let mut lemmas = Vec::with_capacity(word_count as usize);
        for _ in 0..word_count {
            lemmas.push(clean_lemma(fields.next("word")?));
            fields.next("lex_id")?;
        }
        let pointer_count = fields.number("p_cnt", 10)?;
        let mut hypernym_ids = Vec::new();
        let mut similar_ids = Vec::new();
        let mut antonyms = Vec::new();
        for _ in 0..pointer_count {
            let symbol = fields.next("pointer symbol")?;
            let target_offset = fields.number("pointer offset", 10)?;
            let target_pos_raw = fields.next("pointer pos")?;
            let target_pos = WnPos::from_char(target_pos_raw)
                .ok_or_else(|| fields.malformed(format!("bad pointer pos {target_pos_raw:?}")))?;
            let source_target = fields.next("pointer source/target")?;
            if source_target.len() != 4 {
                return Err(fields.malformed(format!("bad source/target {source_target:?}")));
            }
            let source_word = usize::from_str_radix(&source_target[..2], 16)
                .map_err(|_| fields.malformed("bad source word number"))?;
            let target_word = usize::from_str_radix(&source_target[2..], 16)
                .map_err(|_| fields.malformed("bad target word number"))?;
            let target = SynsetId {
                offset: target_offset,
                pos: target_pos,
            };
            match symbol {
                "@" if target_pos == pos => hypernym_ids.push(target),
                "&" => similar_ids.push(target),
                "!" => antonyms.push(AntonymPointer {
                    target,
                    source_word,
                    target_word,
                }),
                _ => {}
            }
        }
        out.push(DataRecord {
            synset: Synset {
                id,
                lemmas,
                hypernym_ids,
                similar_ids,
                antonym_lemmas: BTreeMap::new(),
                satellite: ss_type == "s",
            },
            antonyms,
        });
    }
    Ok(out)
}

pub(super) fn parse_index(path: &Path, text: &str, file_pos: WnPos) -> Result<Vec<IndexEntry>, WordNetError> {
    let mut out = Vec::new();
    for (offset, line) in records(text) {
        let mut fields = Fields {
            iter: line.split_ascii_whitespace(),
            file: path,
            offset,
        };
        let lemma = fields.next("lemma")?.to_lowercase();
        let pos_raw = fields.next("pos")?;
        if WnPos::from_char(pos_raw) != Some(file_pos) {
            return Err(fields.malformed(format!("pos {pos_raw:?} in {file_pos} index")));
        }
        let synset_count = fields.number("synset_cnt", 10)?;
        let pointer_count = fields.number("p_cnt", 10)?;
        for _ in 0..pointer_count {
            fields.next("pointer symbol")?;
        }
        fields.number("sense_cnt", 10)?;
        fields.number("tagsense_cnt", 10)?;
        let mut synsets = Vec::with_capacity(synset_count as usize);
        for _ in 0..synset_count {
            synsets.push(SynsetId {
                offset: fields.number("synset offset", 10)?,
                pos: file_pos,
            });
        }
        if fields.iter.next().is_some() {
            return Err(fields.malformed("trailing fields after synset offsets"));
        }
        out.push(IndexEntry {
            lemma,
            synsets,
            line_offset: offset,
        });
    }
    Ok(out)
}
