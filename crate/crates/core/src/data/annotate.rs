//! Bracket annotation: `[ reparandum + { interregnum } repair ]`.
//!
//! Grammar over whitespace-separated tokens (`[ + ] { }` are reserved):
//!
//! ```text
//! utterance   := item*
//! item        := WORD | disfluency
//! disfluency  := "[" item+ "+" interregnum? item* "]"
//! interregnum := "{" WORD* "}"
//! ```
//!
//! Reparandum words at every nesting depth are labelled disfluent; all other
//! words, including interregna and repairs, are fluent.

use crate::data::sequence::{classify_span, DisfluencyKind, DisfluencySpan, TokenSequence};
use crate::error::{Error, Result};

const RESERVED: [&str; 5] = ["[", "+", "]", "{", "}"];

struct Parser<'a> {
    toks: Vec<&'a str>,
    pos: usize,
    words: Vec<String>,
    spans: Vec<DisfluencySpan>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).copied()
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at token {}", self.pos + 1))
    }

    fn items(&mut self, stop: &[&str]) -> Result<()> {
        loop {
            match self.peek() {
                None if stop.is_empty() => return Ok(()),
                None => return Err(self.err("unbalanced brackets: missing ']'")),
                Some(t) if stop.contains(&t) => return Ok(()),
                Some("[") => self.disfluency()?,
                Some("]") => return Err(self.err("unbalanced brackets: unexpected ']'")),
                Some("+") => return Err(self.err("'+' outside a reparandum")),
                Some("{") | Some("}") => return Err(self.err("braces only allowed right after '+'")),
                Some(w) => {
                    self.words.push(w.to_string());
                    self.pos += 1;
                }
            }
        }
    }

    fn disfluency(&mut self) -> Result<()> {
        self.pos += 1; // '['
        let slot = self.spans.len();
        self.spans.push(DisfluencySpan {
            reparandum: 0..0,
            interregnum: None,
            repair: None,
            kind: DisfluencyKind::Restart,
        });
        let start = self.words.len();
        self.items(&["+", "]"])?;
        if self.peek() != Some("+") {
            return Err(self.err("'[ ]' without '+'"));
        }
        self.pos += 1;
        let reparandum = start..self.words.len();
        if reparandum.is_empty() {
            return Err(self.err("empty reparandum"));
        }
        let mut interregnum = None;
        if self.peek() == Some("{") {
            self.pos += 1;
            let s = self.words.len();
            loop {
                match self.peek() {
                    Some("}") => break,
                    None => return Err(self.err("unbalanced braces: missing '}'")),
                    Some(t) if RESERVED.contains(&t) => {
                        return Err(self.err("brackets inside an interregnum"))
                    }
                    Some(w) => {
                        self.words.push(w.to_string());
                        self.pos += 1;
                    }
                }
            }
            self.pos += 1;
            interregnum = Some(s..self.words.len()).filter(|r| !r.is_empty());
        }
        let s = self.words.len();
        self.items(&["]"])?;
        self.pos += 1; // ']'
        let repair = Some(s..self.words.len()).filter(|r| !r.is_empty());
        let mut span = DisfluencySpan {
            reparandum,
            interregnum,
            repair,
            kind: DisfluencyKind::Restart,
        };
        span.kind = classify_span(&span, &self.words);
        self.spans[slot] = span;
        Ok(())
    }
}

/// Parses one annotated utterance.
pub fn parse_annotated(text: &str) -> Result<TokenSequence> {
    let mut p = Parser {
        toks: text.split_whitespace().collect(),
        pos: 0,
        words: Vec::new(),
        spans: Vec::new(),
    };
    p.items(&[])?;
    let mut seq = TokenSequence {
        tokens: p.words,
        labels: Vec::new(),
        spans: p.spans,
    };
    seq.relabel_from_spans();
    Ok(seq)
}

/// Renders a sequence back into bracket annotation.
pub fn write_annotated(seq: &TokenSequence) -> String {
    let spans: Vec<&DisfluencySpan> = seq.spans.iter().collect();
    let mut out: Vec<&str> = Vec::with_capacity(seq.len() + 4 * spans.len());
    write_range(seq, 0, seq.len(), &spans, &mut out);
    out.join(" ")
}

fn contained(s: &DisfluencySpan, lo: usize, hi: usize) -> bool {
    s.reparandum.start >= lo && s.end() <= hi
}

fn write_range<'a>(
    seq: &'a TokenSequence,
    lo: usize,
    hi: usize,
    spans: &[&'a DisfluencySpan],
    out: &mut Vec<&'a str>,
) {
    let mut i = lo;
    let mut k = 0;
    while i < hi {
        if k < spans.len() && spans[k].reparandum.start == i {
            let s = spans[k];
            // Pre-order: descendants follow their parent contiguously.
            let n_children = spans[k + 1..]
                .iter()
                .take_while(|c| contained(c, s.reparandum.start, s.end()))
                .count();
            let children = &spans[k + 1..k + 1 + n_children];
            let in_rep: Vec<_> = children
                .iter()
                .copied()
                .filter(|c| contained(c, s.reparandum.start, s.reparandum.end))
                .collect();
            out.push("[");
            write_range(seq, s.reparandum.start, s.reparandum.end, &in_rep, out);
            out.push("+");
            if let Some(r) = &s.interregnum {
                out.push("{");
                out.extend(seq.tokens[r.clone()].iter().map(String::as_str));
                out.push("}");
            }
            if let Some(r) = &s.repair {
                let in_repair: Vec<_> = children
                    .iter()
                    .copied()
                    .filter(|c| contained(c, r.start, r.end))
                    .collect();
                write_range(seq, r.start, r.end, &in_repair, out);
            }
            out.push("]");
            i = s.end();
            k += 1 + n_children;
        } else {
            out.push(&seq.tokens[i]);
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::sequence::Label;

    fn disfluent_words(seq: &TokenSequence) -> Vec<&str> {
        seq.tokens
            .iter()
            .zip(&seq.labels)
            .filter(|(_, l)| **l == Label::Disfluent)
            .map(|(t, _)| t.as_str())
            .collect()
    }

    const EXAMPLE_ONE: &str = "i want a flight [ to boston + { uh i mean } to denver ] on friday";

    #[test]
    fn example_one() {
        let seq = parse_annotated(EXAMPLE_ONE).unwrap();
        assert_eq!(disfluent_words(&seq), vec!["to", "boston"]);
        assert_eq!(seq.spans.len(), 1);
        let s = &seq.spans[0];
        assert_eq!(s.kind, DisfluencyKind::Correction);
        assert_eq!(s.reparandum, 4..6);
        assert_eq!(s.interregnum, Some(6..9));
        assert_eq!(s.repair, Some(9..11));
        assert_eq!(write_annotated(&seq), EXAMPLE_ONE);
    }

    #[test]
    fn repetition_and_plain_text() {
        let seq = parse_annotated("she said [ in a + in a ] preschool").unwrap();
        assert_eq!(disfluent_words(&seq), vec!["in", "a"]);
        assert_eq!(seq.spans[0].kind, DisfluencyKind::Repetition);
        let plain = parse_annotated("no brackets here").unwrap();
        assert_eq!(plain.disfluent_count(), 0);
        assert!(plain.spans.is_empty());
    }

    #[test]
    fn restart() {
        let seq = parse_annotated("[ they use that + ] i know").unwrap();
        assert_eq!(seq.spans[0].kind, DisfluencyKind::Restart);
        assert_eq!(seq.spans[0].repair, None);
        assert_eq!(disfluent_words(&seq), vec!["they", "use", "that"]);
    }

    #[test]
    fn nested_reparanda_are_all_disfluent() {
        let text = "well [ [ i + i ] think we did + i think we did ] learn";
        let seq = parse_annotated(text).unwrap();
        assert_eq!(seq.spans.len(), 2);
        assert_eq!(disfluent_words(&seq), vec!["i", "i", "think", "we", "did"]);
        assert_eq!(seq.spans[0].reparandum, 1..6);
        assert_eq!(seq.spans[1].reparandum, 1..2);
        assert_eq!(write_annotated(&seq), text);
        let in_repair = "[ a b + [ a + a ] c ]";
        let seq = parse_annotated(in_repair).unwrap();
        assert_eq!(write_annotated(&seq), in_repair);
        assert_eq!(disfluent_words(&seq), vec!["a", "b", "a"]);
    }

    #[test]
    fn errors() {
        for bad in [
            "[ a b ]",
            "[ a + b",
            "a ] b",
            "[ + b ]",
            "a + b",
            "{ uh } a",
            "[ a + { uh b ]",
            "[ a + { [ } b ]",
        ] {
            assert!(matches!(parse_annotated(bad), Err(Error::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn empty_input() {
        let seq = parse_annotated("   ").unwrap();
        assert!(seq.is_empty());
        assert_eq!(write_annotated(&seq), "");
    }
}
