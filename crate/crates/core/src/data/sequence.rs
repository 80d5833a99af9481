use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Fluent,
    Disfluent,
}

impl Label {
    pub fn index(self) -> usize {
        match self {
            Label::Fluent => 0,
            Label::Disfluent => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Label::Fluent
        } else {
            Label::Disfluent
        }
    }

    pub fn is_disfluent(self) -> bool {
        self == Label::Disfluent
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisfluencyKind {
    Repetition,
    Correction,
    Restart,
}

impl DisfluencyKind {
    pub const ALL: [DisfluencyKind; 3] = [
        DisfluencyKind::Repetition,
        DisfluencyKind::Correction,
        DisfluencyKind::Restart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DisfluencyKind::Repetition => "repetition",
            DisfluencyKind::Correction => "correction",
            DisfluencyKind::Restart => "restart",
        }
    }
}

/// One `[ reparandum + { interregnum } repair ]` structure, as token ranges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisfluencySpan {
    pub reparandum: Range<usize>,
    pub interregnum: Option<Range<usize>>,
    pub repair: Option<Range<usize>>,
    pub kind: DisfluencyKind,
}

impl DisfluencySpan {
    /// First token after the whole structure.
    pub fn end(&self) -> usize {
        self.repair
            .as_ref()
            .map(|r| r.end)
            .or_else(|| self.interregnum.as_ref().map(|r| r.end))
            .unwrap_or(self.reparandum.end)
    }

    /// Words strictly between the first reparandum word and the first
    /// repair word, i.e. the gap between aligned rough copies. `None` for
    /// structures without a repair.
    pub fn copy_distance(&self) -> Option<usize> {
        self.repair
            .as_ref()
            .filter(|r| !r.is_empty())
            .map(|r| r.start - self.reparandum.start - 1)
    }
}

/// Repetition iff the repair words equal the reparandum words; restart iff
/// there is no repair; correction otherwise.
pub fn classify_span(span: &DisfluencySpan, tokens: &[String]) -> DisfluencyKind {
    match &span.repair {
        None => DisfluencyKind::Restart,
        Some(r) if r.is_empty() => DisfluencyKind::Restart,
        Some(r) => {
            if tokens[r.clone()] == tokens[span.reparandum.clone()] {
                DisfluencyKind::Repetition
            } else {
                DisfluencyKind::Correction
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub labels: Vec<Label>,
    /// Gold structures in pre-order (outer before inner, left to right).
    pub spans: Vec<DisfluencySpan>,
}

impl TokenSequence {
    pub fn fluent(tokens: Vec<String>) -> Self {
        let labels = vec![Label::Fluent; tokens.len()];
        Self {
            tokens,
            labels,
            spans: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn disfluent_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_disfluent()).count()
    }

    pub fn label_indices(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.index()).collect()
    }

    /// Recomputes labels from spans: reparandum words at any depth are disfluent.
    pub fn relabel_from_spans(&mut self) {
        self.labels = vec![Label::Fluent; self.tokens.len()];
        for s in &self.spans {
            for i in s.reparandum.clone() {
                self.labels[i] = Label::Disfluent;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tokens.len() != self.labels.len() {
            return Err(Error::Shape(format!(
                "{} tokens but {} labels",
                self.tokens.len(),
                self.labels.len()
            )));
        }
        for s in &self.spans {
            let n = self.tokens.len();
            let mut last = s.reparandum.end;
            if s.reparandum.is_empty() || s.reparandum.end > n {
                return Err(Error::Parse(format!("bad reparandum {:?}", s.reparandum)));
            }
            for r in [&s.interregnum, &s.repair].into_iter().flatten() {
                if r.start < last || r.end > n || r.start > r.end {
                    return Err(Error::Parse(format!("misordered span {s:?}")));
                }
                last = r.end;
            }
            if s.reparandum.clone().any(|i| !self.labels[i].is_disfluent()) {
                return Err(Error::Parse(format!("reparandum {:?} not labelled disfluent", s.reparandum)));
            }
        }
        Ok(())
    }

    /// The same utterance with interregnum words removed and spans re-indexed.
    pub fn strip_interregna(&self) -> TokenSequence {
        let mut drop = vec![false; self.len()];
        for s in &self.spans {
            if let Some(r) = &s.interregnum {
                for i in r.clone() {
                    // Interregna nested inside an outer reparandum are disfluent words.
                    if !self.labels[i].is_disfluent() {
                        drop[i] = true;
                    }
                }
            }
        }
        let keep: Vec<bool> = drop.iter().map(|d| !d).collect();
        self.retain(&keep)
    }

    /// Keeps tokens where `keep[i]`, remapping spans. Spans whose reparandum
    /// vanishes are dropped; kinds are re-derived from the surviving words.
    pub fn retain(&self, keep: &[bool]) -> TokenSequence {
        let mut new_index = Vec::with_capacity(self.len() + 1);
        let mut next = 0;
        for &k in keep {
            new_index.push(next);
            if k {
                next += 1;
            }
        }
        new_index.push(next);
        let map = |r: &Range<usize>| new_index[r.start]..new_index[r.end];
        let tokens: Vec<String> = self
            .tokens
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(t, _)| t.clone())
            .collect();
        let labels = self
            .labels
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(l, _)| *l)
            .collect();
        let spans = self
            .spans
            .iter()
            .filter_map(|s| {
                let reparandum = map(&s.reparandum);
                if reparandum.is_empty() {
                    return None;
                }
                let mut span = DisfluencySpan {
                    reparandum,
                    interregnum: s.interregnum.as_ref().map(map).filter(|r| !r.is_empty()),
                    repair: s.repair.as_ref().map(map).filter(|r| !r.is_empty()),
                    kind: s.kind,
                };
                span.kind = classify_span(&span, &tokens);
                Some(span)
            })
            .collect();
        TokenSequence {
            tokens,
            labels,
            spans,
        }
    }
}
