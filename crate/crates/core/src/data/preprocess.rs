//! Token cleanup applied before vocabulary building and training.

use crate::data::sequence::TokenSequence;

/// Characters that make up punctuation-only tokens.
pub const PUNCTUATION: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~\u{2026}\u{2013}\u{2014}\u{2018}\u{2019}\u{201c}\u{201d}";

pub fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| PUNCTUATION.contains(c))
}

/// Partial words carry a trailing hyphen, e.g. `wou-`.
pub fn is_partial_word(token: &str) -> bool {
    token.len() > 1 && token.ends_with('-') && !is_punctuation(token)
}

/// Lowercases, then drops punctuation-only tokens and partial words, keeping
/// labels and span indices aligned with the surviving tokens.
pub fn preprocess(seq: &TokenSequence) -> TokenSequence {
    let keep: Vec<bool> = seq
        .tokens
        .iter()
        .map(|t| !is_punctuation(t) && !is_partial_word(t))
        .collect();
    let mut out = seq.retain(&keep);
    for t in &mut out.tokens {
        *t = t.to_lowercase();
    }
    // Case folding can turn a correction into a repetition.
    for s in &mut out.spans {
        s.kind = crate::data::sequence::classify_span(s, &out.tokens);
    }
    out
}

/// Preprocesses every sentence and drops the ones left empty.
pub fn preprocess_corpus(corpus: &[TokenSequence]) -> Vec<TokenSequence> {
    corpus
        .iter()
        .map(preprocess)
        .filter(|s| !s.is_empty())
        .collect()
}
