//! Plain-text error listings.
//!
//! Each token is written as `word`, `word|GP` (gold and predicted
//! disfluent), `word|G` (missed) or `word|P` (false alarm).

use crate::error::{Error, Result};
use crate::eval::score::{EvalReport, SentenceErrors};

pub fn mark_tokens(tokens: &[String], gold: &[bool], predicted: &[bool]) -> String {
    tokens
        .iter()
        .zip(gold.iter().zip(predicted))
        .map(|(t, (&g, &p))| match (g, p) {
            (true, true) => format!("{t}|GP"),
            (true, false) => format!("{t}|G"),
            (false, true) => format!("{t}|P"),
            (false, false) => t.clone(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Inverse of [`mark_tokens`].
pub fn parse_marked(line: &str) -> Result<(Vec<String>, Vec<bool>, Vec<bool>)> {
    let mut tokens = Vec::new();
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for item in line.split_whitespace() {
        let (word, g, p) = match item.rsplit_once('|') {
            Some((w, "GP")) => (w, true, true),
            Some((w, "G")) => (w, true, false),
            Some((w, "P")) => (w, false, true),
            Some(_) => return Err(Error::Parse(format!("bad mark in {item:?}"))),
            None => (item, false, false),
        };
        if word.is_empty() {
            return Err(Error::Parse(format!("empty word in {item:?}")));
        }
        tokens.push(word.to_string());
        gold.push(g);
        pred.push(p);
    }
    Ok((tokens, gold, pred))
}

pub fn format_error(e: &SentenceErrors) -> String {
    format!("#{}\t{}", e.id + 1, mark_tokens(&e.tokens, &e.gold, &e.predicted))
}

/// Up to `limit` sentences whose predicted labels differ from gold.
pub fn error_listing(report: &EvalReport, limit: usize) -> String {
    report
        .errors
        .iter()
        .take(limit)
        .map(|e| format_error(e) + "\n")
        .collect()
}
