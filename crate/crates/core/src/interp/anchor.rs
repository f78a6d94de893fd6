use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::InterpError;
use crate::parse::normalize;

/// A single text covering both sides of a positive/negative pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorText {
    pub text: String,
    /// Differing token range in the positive text.
    pub pos_diff_span: Range<usize>,
    /// Differing token range in the negative text.
    pub neg_diff_span: Range<usize>,
}

/// Drops the shared prefix and joins the two differing spans, each followed
/// by the shared suffix, with "or":
/// `"<pos diff> <suffix> or <neg diff> <suffix>"`.
pub fn anchor_text(pos: &str, neg: &str) -> Result<AnchorText, InterpError> {
    let (pos_norm, neg_norm) = (normalize(pos), normalize(neg));
    let a: Vec<&str> = pos_norm.split_whitespace().collect();
    let b: Vec<&str> = neg_norm.split_whitespace().collect();
    if a == b {
        return Err(InterpError::IdenticalTexts(pos_norm));
    }
    let prefix = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let room = a.len().min(b.len()) - prefix;
    let suffix = a
        .iter()
        .rev()
        .zip(b.iter().rev())
        .take(room)
        .take_while(|(x, y)| x == y)
        .count();
    let pos_span = prefix..a.len() - suffix;
    let neg_span = prefix..b.len() - suffix;
    if pos_span.is_empty() || neg_span.is_empty() {
        return Err(InterpError::Undiffable {
            pos: pos_norm,
            neg: neg_norm,
        });
    }
    let tail = &a[a.len() - suffix..];
    let mut words: Vec<&str> = Vec::new();
    words.extend(&a[pos_span.clone()]);
    words.extend(tail);
    words.push("or");
    words.extend(&b[neg_span.clone()]);
    words.extend(tail);
    Ok(AnchorText {
        text: words.join(" "),
        pos_diff_span: pos_span,
        neg_diff_span: neg_span,
    })
}
