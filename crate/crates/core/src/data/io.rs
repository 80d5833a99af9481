//! Corpus files.
//!
//! * `bracket`: one annotated utterance per line, see [`parse_annotated`].
//!   Blank lines are skipped.
//! * `tabular`: one token per line as `token<TAB>label[<TAB>partial]`, where
//!   label is `E` (disfluent) or `_` (fluent) and the optional third column is
//!   `P` for a partial word or `_`. Sentences are separated by blank lines.
//!   Span structure is not representable and is dropped on write.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::annotate::{parse_annotated, write_annotated};
use crate::data::sequence::{Label, TokenSequence};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Bracket,
    Tabular,
}

impl FromStr for CorpusFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bracket" | "bracket-text" => Ok(CorpusFormat::Bracket),
            "tabular" | "tsv" => Ok(CorpusFormat::Tabular),
            _ => Err(Error::Config(format!("unknown corpus format {s:?} (bracket|tabular)"))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Bracket => "bracket",
            CorpusFormat::Tabular => "tabular",
        })
    }
}

impl CorpusFormat {
    /// `.tsv` and `.tab` files are tabular; everything else is bracket text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("tab") => CorpusFormat::Tabular,
            _ => CorpusFormat::Bracket,
        }
    }
}

pub const DISFLUENT_MARK: &str = "E";
pub const FLUENT_MARK: &str = "_";
pub const PARTIAL_MARK: &str = "P";

pub fn parse_corpus(text: &str, format: CorpusFormat, origin: &Path) -> Result<Vec<TokenSequence>> {
    match format {
        CorpusFormat::Bracket => parse_bracket(text, origin),
        CorpusFormat::Tabular => parse_tabular(text, origin),
    }
}

fn malformed(origin: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Malformed {
        path: origin.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_bracket(text: &str, origin: &Path) -> Result<Vec<TokenSequence>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let seq = parse_annotated(line).map_err(|e| malformed(origin, i + 1, e.to_string()))?;
        out.push(seq);
    }
    Ok(out)
}

fn parse_tabular(text: &str, origin: &Path) -> Result<Vec<TokenSequence>> {
    let mut out = Vec::new();
    let mut cur = TokenSequence::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 || cols.len() > 3 {
            return Err(malformed(origin, i + 1, format!("expected 2 or 3 tab-separated columns, got {}", cols.len())));
        }
        let token = cols[0];
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(malformed(origin, i + 1, format!("bad token {token:?}")));
        }
        let label = match cols[1] {
            DISFLUENT_MARK => Label::Disfluent,
            FLUENT_MARK => Label::Fluent,
            other => {
                return Err(malformed(origin, i + 1, format!("label must be E or _, got {other:?}")))
            }
        };
        let partial = match cols.get(2).copied() {
            None | Some(FLUENT_MARK) => false,
            Some(PARTIAL_MARK) => true,
            Some(other) => {
                return Err(malformed(origin, i + 1, format!("partial column must be P or _, got {other:?}")))
            }
        };
        // Normalise to the trailing-hyphen convention so preprocessing removes it.
        let token = if partial && !token.ends_with('-') {
            format!("{token}-")
        } else {
            token.to_string()
        };
        cur.tokens.push(token);
        cur.labels.push(label);
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

pub fn format_corpus(corpus: &[TokenSequence], format: CorpusFormat) -> String {
    let mut out = String::new();
    match format {
        CorpusFormat::Bracket => {
            for seq in corpus {
                out.push_str(&write_annotated(seq));
                out.push('\n');
            }
        }
        CorpusFormat::Tabular => {
            for (k, seq) in corpus.iter().enumerate() {
                if k > 0 {
                    out.push('\n');
                }
                out.push_str(&format_tabular_sentence(&seq.tokens, &seq.labels));
            }
        }
    }
    out
}

/// One sentence in tabular form, each line newline-terminated.
pub fn format_tabular_sentence(tokens: &[String], labels: &[Label]) -> String {
    let mut out = String::new();
    for (t, l) in tokens.iter().zip(labels) {
        out.push_str(t);
        out.push('\t');
        out.push_str(if l.is_disfluent() { DISFLUENT_MARK } else { FLUENT_MARK });
        out.push('\n');
    }
    out
}

pub fn read_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<TokenSequence>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, format, path)
}

pub fn write_corpus(path: &Path, corpus: &[TokenSequence], format: CorpusFormat) -> Result<()> {
    crate::model::write_atomic(path, format_corpus(corpus, format).as_bytes())
}
