use super::{join, NounPhrase, ParseError, PosTag, Token};

fn is_modifier(tag: PosTag) -> bool {
    matches!(tag, PosTag::Det | PosTag::Num | PosTag::Adj)
}

/// Maximal left-to-right spans matching `(DET|NUM|ADJ)* NOUN+`.
pub fn chunk_noun_phrases(tokens: &[Token], tags: &[PosTag]) -> Result<Vec<NounPhrase>, ParseError> {
    debug_assert_eq!(tokens.len(), tags.len());
    let n = tags.len();
    let mut phrases = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && is_modifier(tags[j]) {
            j += 1;
        }
        let mut k = j;
        while k < n && tags[k] == PosTag::Noun {
            k += 1;
        }
        if k > j {
            phrases.push(NounPhrase {
                start: i,
                end: k,
                text: join(&tokens[i..k]),
            });
            i = k;
        } else {
            // a modifier run not closed by a noun cannot start any later match
            i = j.max(i + 1);
        }
    }
    if phrases.is_empty() {
        return Err(ParseError::NoNounPhrase(join(tokens)));
    }
    Ok(phrases)
}
