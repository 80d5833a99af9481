use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::data::{DisfluencyKind, DisfluencySpan, Label, TokenSequence};
use crate::error::{Error, Result};

/// Token counts over the disfluent class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn add(&mut self, gold: bool, pred: bool) {
        match (gold, pred) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => {}
        }
    }

    pub fn merge(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    /// `None` when nothing was predicted disfluent.
    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `None` when there is nothing disfluent in the gold data.
    pub fn recall(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> Option<f64> {
        let (p, r) = (self.precision()?, self.recall()?);
        Some(if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 })
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentenceErrors {
    pub id: usize,
    pub tokens: Vec<String>,
    pub gold: Vec<bool>,
    pub predicted: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub counts: Counts,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub per_kind: BTreeMap<DisfluencyKind, Counts>,
    pub errors: Vec<SentenceErrors>,
}

impl EvalReport {
    pub fn kind_f1(&self, kind: DisfluencyKind) -> Option<f64> {
        self.per_kind.get(&kind).and_then(Counts::f1)
    }

    /// Machine-readable summary: a header row then one row for `all` and one per kind.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("scope\ttp\tfp\tfn\tprecision\trecall\tf1\n");
        let mut row = |name: &str, c: &Counts| {
            out.push_str(&format!(
                "{name}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                c.tp,
                c.fp,
                c.fn_,
                fmt_metric(c.precision()),
                fmt_metric(c.recall()),
                fmt_metric(c.f1())
            ));
        };
        row("all", &self.counts);
        for (k, c) in &self.per_kind {
            row(k.name(), c);
        }
        out
    }
}

/// Absent metrics print as `NA`.
pub fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{:.4}", x))
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{:.2}", 100.0 * x));
        writeln!(
            f,
            "P={} R={} F={} (tp={} fp={} fn={})",
            pct(self.precision),
            pct(self.recall),
            pct(self.f1),
            self.counts.tp,
            self.counts.fp,
            self.counts.fn_
        )?;
        for (k, c) in &self.per_kind {
            writeln!(f, "  {:<11} F={} (tp={} fp={} fn={})", k.name(), pct(c.f1()), c.tp, c.fp, c.fn_)?;
        }
        write!(f, "sentences with errors: {}", self.errors.len())
    }
}

fn check_aligned(gold: &[TokenSequence], predicted: &[Vec<Label>]) -> Result<()> {
    if gold.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "{} gold sentences but {} predicted",
            gold.len(),
            predicted.len()
        )));
    }
    for (i, (g, p)) in gold.iter().zip(predicted).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Shape(format!(
                "sentence {}: {} gold tokens but {} predicted",
                i + 1,
                g.len(),
                p.len()
            )));
        }
    }
    Ok(())
}

/// Token-level scores of `predicted` against `gold`.
pub fn score(gold: &[TokenSequence], predicted: &[Vec<Label>]) -> Result<EvalReport> {
    check_aligned(gold, predicted)?;
    let mut counts = Counts::default();
    let mut errors = Vec::new();
    for (id, (g, p)) in gold.iter().zip(predicted).enumerate() {
        for (gl, pl) in g.labels.iter().zip(p) {
            counts.add(gl.is_disfluent(), pl.is_disfluent());
        }
        if &g.labels != p {
            errors.push(SentenceErrors {
                id,
                tokens: g.tokens.clone(),
                gold: g.labels.iter().map(|l| l.is_disfluent()).collect(),
                predicted: p.iter().map(|l| l.is_disfluent()).collect(),
            });
        }
    }
    Ok(EvalReport {
        counts,
        precision: counts.precision(),
        recall: counts.recall(),
        f1: counts.f1(),
        per_kind: score_by_kind(gold, predicted)?,
        errors,
    })
}

/// Scores two corpora that must carry identical tokens.
pub fn score_corpora(gold: &[TokenSequence], predicted: &[TokenSequence]) -> Result<EvalReport> {
    if gold.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "{} gold sentences but {} predicted",
            gold.len(),
            predicted.len()
        )));
    }
    for (i, (g, p)) in gold.iter().zip(predicted).enumerate() {
        if g.tokens != p.tokens {
            return Err(Error::Shape(format!("sentence {}: tokenization differs", i + 1)));
        }
    }
    let labels: Vec<Vec<Label>> = predicted.iter().map(|p| p.labels.clone()).collect();
    score(gold, &labels)
}

fn distance_to(span: &DisfluencySpan, i: usize) -> usize {
    let (lo, hi) = (span.reparandum.start, span.end());
    if i < lo {
        lo - i
    } else if i >= hi {
        i + 1 - hi
    } else {
        0
    }
}

/// Per-kind counts. Gold disfluent tokens go to the innermost span whose
/// reparandum holds them; false positives go to the nearest span in the
/// sentence (distance to the span's extent, ties to the earlier span).
pub fn score_by_kind(
    gold: &[TokenSequence],
    predicted: &[Vec<Label>],
) -> Result<BTreeMap<DisfluencyKind, Counts>> {
    check_aligned(gold, predicted)?;
    let mut out: BTreeMap<DisfluencyKind, Counts> = BTreeMap::new();
    for (g, p) in gold.iter().zip(predicted) {
        if g.spans.is_empty() {
            continue;
        }
        for kind in g.spans.iter().map(|s| s.kind) {
            out.entry(kind).or_default();
        }
        for (i, (gl, pl)) in g.labels.iter().zip(p).enumerate() {
            let (gold_d, pred_d) = (gl.is_disfluent(), pl.is_disfluent());
            if !gold_d && !pred_d {
                continue;
            }
            // Pre-order lists inner spans after the spans that contain them.
            let owner = if gold_d {
                g.spans.iter().rev().find(|s| s.reparandum.contains(&i))
            } else {
                None
            };
            let owner = owner.or_else(|| {
                g.spans
                    .iter()
                    .enumerate()
                    .min_by_key(|(k, s)| (distance_to(s, i), s.reparandum.start, *k))
                    .map(|(_, s)| s)
            });
            if let Some(s) = owner {
                out.entry(s.kind).or_default().add(gold_d, pred_d);
            }
        }
    }
    Ok(out)
}
