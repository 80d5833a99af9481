//! Synthetic disfluent corpora from a small template grammar.
//!
//! A fluent sentence is drawn from the templates. To make it disfluent, a
//! copy distance `d` is drawn from the configured histogram and an optional
//! interregnum of `i <= d` words is chosen; the reparandum then has `d + 1 - i`
//! words and is a prefix-aligned copy of the words that follow it (the
//! repair). Corrections replace some of the copied words with other words of
//! the same category. Restarts prepend the abandoned start of another
//! sentence and have no repair.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::data::sequence::{classify_span, DisfluencyKind, DisfluencySpan, TokenSequence};
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const GENERATOR_PRESETS: [&str; 2] = ["switchboard-like", "rough-copy-hard"];

/// Buckets of the copy-distance histogram: distances `0..=12`.
pub const DISTANCE_BUCKETS: usize = 13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Sentences produced by [`generate_corpus`] (the train split).
    pub sentences: usize,
    pub dev_sentences: usize,
    pub test_sentences: usize,
    /// Fraction of sentences left without any disfluency.
    pub fluent_ratio: f64,
    /// Probabilities of repetition, correction and restart.
    pub kind_mix: [f64; 3],
    /// Restart reparandum length distribution; entry `k` is the weight of length `k + 1`.
    pub reparandum_len: Vec<f64>,
    pub interregnum_prob: f64,
    /// Weight of each copy distance `0..`; at most [`DISTANCE_BUCKETS`] entries.
    pub distance_hist: Vec<f64>,
    /// Target fraction of reparandum words that reappear in their repair.
    pub copy_target: f64,
    /// Probability of joining a second clause with a conjunction.
    pub compound_prob: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self::preset("switchboard-like").expect("built-in preset")
    }
}

impl GeneratorConfig {
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "switchboard-like" => Ok(Self {
                seed: 17,
                sentences: 4000,
                dev_sentences: 500,
                test_sentences: 500,
                fluent_ratio: 0.82,
                kind_mix: [0.45, 0.45, 0.10],
                reparandum_len: vec![0.3, 0.3, 0.25, 0.15],
                interregnum_prob: 0.3,
                distance_hist: vec![
                    0.10, 0.22, 0.20, 0.15, 0.11, 0.08, 0.05, 0.03, 0.02, 0.015, 0.01, 0.0075,
                    0.0075,
                ],
                copy_target: 0.6,
                compound_prob: 0.25,
            }),
            "rough-copy-hard" => Ok(Self {
                seed: 23,
                sentences: 2000,
                dev_sentences: 500,
                test_sentences: 500,
                fluent_ratio: 0.2,
                kind_mix: [0.25, 0.70, 0.05],
                reparandum_len: vec![0.3, 0.3, 0.25, 0.15],
                interregnum_prob: 0.15,
                distance_hist: vec![0.02, 0.18, 0.22, 0.20, 0.16, 0.12, 0.10],
                copy_target: 0.6,
                compound_prob: 0.25,
            }),
            _ => Err(Error::Config(format!(
                "unknown generator preset {name:?} (expected one of {})",
                GENERATOR_PRESETS.join(", ")
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        for (name, v) in [
            ("fluent_ratio", self.fluent_ratio),
            ("interregnum_prob", self.interregnum_prob),
            ("copy_target", self.copy_target),
            ("compound_prob", self.compound_prob),
        ] {
            if !prob(v) {
                return bad(format!("{name} = {v} is not a probability"));
            }
        }
        let normalized = |name: &str, w: &[f64]| -> Result<()> {
            if w.is_empty() || w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(Error::Config(format!("{name} must be non-empty and non-negative")));
            }
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(Error::Config(format!("{name} sums to {s}, expected 1")));
            }
            Ok(())
        };
        normalized("kind_mix", &self.kind_mix)?;
        normalized("reparandum_len", &self.reparandum_len)?;
        normalized("distance_hist", &self.distance_hist)?;
        if self.distance_hist.len() > DISTANCE_BUCKETS {
            return bad(format!("distance_hist has more than {DISTANCE_BUCKETS} buckets"));
        }
        Ok(())
    }
}

/// Word categories, filler phrases and sentence templates. Template tokens
/// written in capitals name a category; anything else is literal.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub categories: BTreeMap<String, Vec<String>>,
    pub fillers: Vec<Vec<String>>,
    pub templates: Vec<(f64, Vec<String>)>,
    pub conjunctions: Vec<String>,
}

const CONTENT_CATEGORIES: [&str; 7] = ["NAME", "NOUN", "ADJ", "VT", "VI", "PLACE", "DAY"];

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

impl Lexicon {
    pub fn english() -> Self {
        let cats = [
            ("PRON", "i we they you he she"),
            ("NAME", "john mary susan david linda peter sarah mike anna tom"),
            ("DET", "the a this that my our their your some every"),
            (
                "NOUN",
                "flight ticket car house dog cat school job book movie game team city office \
                 meeting report letter phone computer plan idea problem question answer friend \
                 family teacher doctor student garden kitchen table window door road train bus \
                 hotel restaurant store market bank church park river lake beach party dinner \
                 lunch breakfast class project company budget price contract package coffee \
                 paper picture song story",
            ),
            (
                "ADJ",
                "big small old new good bad nice cheap expensive early late long short red blue \
                 green quiet busy happy strange simple hard easy local public private young \
                 little great real",
            ),
            (
                "VT",
                "want need like saw bought found took made sold used got read wrote watched \
                 called visited fixed opened closed paid sent brought kept missed lost picked \
                 built ordered cleaned painted checked changed tried helped met",
            ),
            ("VI", "went arrived stayed waited worked lived stopped started returned talked walked drove flew"),
            ("PREP", "in at near with for about behind under"),
            (
                "PLACE",
                "boston denver chicago dallas atlanta seattle houston phoenix miami portland \
                 austin detroit memphis nashville orlando tampa baltimore cleveland pittsburgh \
                 omaha tulsa reno fresno oakland raleigh richmond buffalo toledo albany spokane",
            ),
            ("DAY", "monday tuesday wednesday thursday friday saturday sunday"),
            (
                "ADV",
                "really probably usually just actually always never often sometimes maybe still \
                 already also finally",
            ),
            ("NUM", "two three four five six seven eight nine ten twenty"),
        ];
        let templates = [
            (1.0, "PRON VT DET NOUN"),
            (1.0, "PRON VT DET ADJ NOUN on DAY"),
            (1.0, "i want a flight from PLACE to PLACE on DAY"),
            (1.0, "NAME VI to PLACE on DAY"),
            (1.0, "DET NOUN was ADJ so PRON VT it"),
            (1.0, "PRON ADV VT DET NOUN PREP DET NOUN"),
            (1.0, "PRON think DET NOUN is ADJ"),
            (1.0, "PRON VT NUM NOUN for NAME"),
            (1.0, "DET ADJ NOUN VT DET NOUN"),
            (1.0, "NAME said that PRON VT DET NOUN in PLACE"),
            (1.0, "PRON VI PREP DET NOUN with NAME"),
            (1.0, "we ADV VI to DET ADJ NOUN near PLACE"),
        ];
        Self {
            categories: cats
                .iter()
                .map(|(c, w)| (c.to_string(), words(w)))
                .collect(),
            fillers: ["uh", "um", "well", "i mean", "you know", "uh i mean", "um you know"]
                .iter()
                .map(|f| words(f))
                .collect(),
            templates: templates.iter().map(|(w, t)| (*w, words(t))).collect(),
            conjunctions: words("and but because"),
        }
    }

    pub fn content_word_count(&self) -> usize {
        CONTENT_CATEGORIES
            .iter()
            .filter_map(|c| self.categories.get(*c))
            .map(Vec::len)
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.content_word_count() < 50 {
            return Err(Error::Config("lexicon needs at least 50 content words".into()));
        }
        if self.fillers.is_empty() || self.templates.is_empty() || self.conjunctions.is_empty() {
            return Err(Error::Config("lexicon needs fillers, templates and conjunctions".into()));
        }
        for (_, t) in &self.templates {
            for tok in t {
                if is_slot(tok) && !self.categories.contains_key(tok) {
                    return Err(Error::Config(format!("template uses unknown category {tok}")));
                }
            }
        }
        Ok(())
    }

    fn category_of(&self) -> HashMap<&str, &str> {
        let mut map = HashMap::new();
        for (cat, ws) in &self.categories {
            for w in ws {
                map.entry(w.as_str()).or_insert(cat.as_str());
            }
        }
        map
    }
}

fn is_slot(tok: &str) -> bool {
    tok.chars().all(|c| c.is_ascii_uppercase())
}

/// Greedy controller keeping the running exact-copy rate near the target.
#[derive(Debug, Default)]
struct CopyController {
    copied: usize,
    total: usize,
}

impl CopyController {
    fn record(&mut self, copied: usize, len: usize) {
        self.copied += copied;
        self.total += len;
    }

    /// Number of words to perturb in a correction of length `len` (at least one).
    fn perturb_count(&self, len: usize, target: f64) -> usize {
        (1..=len)
            .min_by(|&a, &b| {
                let err = |k: usize| {
                    ((self.copied + len - k) as f64 / (self.total + len) as f64 - target).abs()
                };
                err(a).total_cmp(&err(b))
            })
            .unwrap_or(1)
    }
}

struct Generator<'a> {
    cfg: &'a GeneratorConfig,
    lex: &'a Lexicon,
    category_of: HashMap<&'a str, &'a str>,
    control: CopyController,
}

impl<'a> Generator<'a> {
    fn clause(&self, rng: &mut Rng) -> Vec<String> {
        let weights: Vec<f64> = self.lex.templates.iter().map(|(w, _)| *w).collect();
        let (_, template) = &self.lex.templates[rng.weighted(&weights)];
        template
            .iter()
            .map(|tok| match self.lex.categories.get(tok) {
                Some(ws) if is_slot(tok) => rng.choose(ws).clone(),
                _ => tok.clone(),
            })
            .collect()
    }

    fn fluent(&self, rng: &mut Rng, min_len: usize) -> Vec<String> {
        let mut out = self.clause(rng);
        let mut first = true;
        while out.len() < min_len || (first && rng.bernoulli(self.cfg.compound_prob)) {
            out.push(rng.choose(&self.lex.conjunctions).clone());
            out.extend(self.clause(rng));
            first = false;
        }
        out
    }

    fn replacement(&self, rng: &mut Rng, word: &str, avoid: &HashSet<&str>) -> String {
        let pool = self
            .category_of
            .get(word)
            .and_then(|c| self.lex.categories.get(*c))
            .filter(|ws| ws.iter().any(|w| !avoid.contains(w.as_str())))
            .or_else(|| self.lex.categories.get("NOUN"))
            .expect("lexicon validated");
        let candidates: Vec<&String> = pool.iter().filter(|w| !avoid.contains(w.as_str())).collect();
        candidates[rng.below(candidates.len())].clone()
    }

    fn interregnum(&self, rng: &mut Rng, max_len: usize) -> Vec<String> {
        if !rng.bernoulli(self.cfg.interregnum_prob) {
            return Vec::new();
        }
        let fits: Vec<&Vec<String>> = self.lex.fillers.iter().filter(|f| f.len() <= max_len).collect();
        if fits.is_empty() {
            Vec::new()
        } else {
            fits[rng.below(fits.len())].clone()
        }
    }

    fn sentence(&mut self, rng: &mut Rng) -> TokenSequence {
        if rng.bernoulli(self.cfg.fluent_ratio) {
            return TokenSequence::fluent(self.fluent(rng, 1));
        }
        let kind = DisfluencyKind::ALL[rng.weighted(&self.cfg.kind_mix)];
        if kind == DisfluencyKind::Restart {
            return self.restart(rng);
        }
        let d = rng.weighted(&self.cfg.distance_hist);
        let inter = self.interregnum(rng, d);
        let len = d + 1 - inter.len();
        let base = self.fluent(rng, len);
        let p = rng.below(base.len() - len + 1);
        let repair = &base[p..p + len];
        let mut reparandum = repair.to_vec();
        if kind == DisfluencyKind::Correction {
            let k = self.control.perturb_count(len, self.cfg.copy_target);
            let mut positions: Vec<usize> = (0..len).collect();
            rng.shuffle(&mut positions);
            let avoid: HashSet<&str> = repair.iter().map(String::as_str).collect();
            for &i in &positions[..k] {
                reparandum[i] = self.replacement(rng, &repair[i], &avoid);
            }
            self.control.record(len - k, len);
        } else {
            self.control.record(len, len);
        }
        let span_at = |start: usize| DisfluencySpan {
            reparandum: start..start + len,
            interregnum: (!inter.is_empty()).then(|| start + len..start + len + inter.len()),
            repair: Some(start + len + inter.len()..start + 2 * len + inter.len()),
            kind,
        };
        let span = span_at(p);
        let mut tokens = base[..p].to_vec();
        tokens.extend(reparandum);
        tokens.extend(inter.iter().cloned());
        tokens.extend_from_slice(&base[p..]);
        finish(tokens, span)
    }

    fn restart(&mut self, rng: &mut Rng) -> TokenSequence {
        let len = rng.weighted(&self.cfg.reparandum_len) + 1;
        let abandoned = self.fluent(rng, len);
        let max_inter = self.lex.fillers.iter().map(Vec::len).max().unwrap_or(0);
        let inter = self.interregnum(rng, max_inter);
        let base = self.fluent(rng, 1);
        self.control.record(0, len);
        let span = DisfluencySpan {
            reparandum: 0..len,
            interregnum: (!inter.is_empty()).then(|| len..len + inter.len()),
            repair: None,
            kind: DisfluencyKind::Restart,
        };
        let mut tokens = abandoned[..len].to_vec();
        tokens.extend(inter);
        tokens.extend(base);
        finish(tokens, span)
    }
}

fn finish(tokens: Vec<String>, mut span: DisfluencySpan) -> TokenSequence {
    span.kind = classify_span(&span, &tokens);
    let mut seq = TokenSequence {
        tokens,
        labels: Vec::new(),
        spans: vec![span],
    };
    seq.relabel_from_spans();
    seq
}

/// Generates `cfg.sentences` annotated sentences from `cfg.seed`.
pub fn generate_corpus(cfg: &GeneratorConfig, lexicon: &Lexicon) -> Result<Vec<TokenSequence>> {
    generate_with(cfg, lexicon, &mut Rng::new(cfg.seed), cfg.sentences)
}

pub fn generate_with(
    cfg: &GeneratorConfig,
    lexicon: &Lexicon,
    rng: &mut Rng,
    count: usize,
) -> Result<Vec<TokenSequence>> {
    cfg.validate()?;
    lexicon.validate()?;
    let mut g = Generator {
        cfg,
        lex: lexicon,
        category_of: lexicon.category_of(),
        control: CopyController::default(),
    };
    Ok((0..count).map(|_| g.sentence(rng)).collect())
}

/// Train, dev and test splits drawn from independent streams derived from `cfg.seed`.
pub fn generate_splits(cfg: &GeneratorConfig, lexicon: &Lexicon) -> Result<[Vec<TokenSequence>; 3]> {
    let mut master = Rng::new(cfg.seed);
    let mut streams = [master.fork(), master.fork(), master.fork()];
    let counts = [cfg.sentences, cfg.dev_sentences, cfg.test_sentences];
    let mut out: [Vec<TokenSequence>; 3] = Default::default();
    for k in 0..3 {
        out[k] = generate_with(cfg, lexicon, &mut streams[k], counts[k])?;
    }
    Ok(out)
}

/// Summary statistics of an annotated corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub sentences: usize,
    pub tokens: usize,
    pub disfluent_tokens: usize,
    pub spans: usize,
    pub spans_by_kind: BTreeMap<DisfluencyKind, usize>,
    pub reparandum_tokens: usize,
    pub copied_tokens: usize,
    /// Normalised over spans that have a repair; last bucket collects longer distances.
    pub distance_hist: Vec<f64>,
}

impl CorpusStats {
    pub fn disfluent_rate(&self) -> f64 {
        self.disfluent_tokens as f64 / self.tokens.max(1) as f64
    }

    pub fn exact_copy_rate(&self) -> f64 {
        self.copied_tokens as f64 / self.reparandum_tokens.max(1) as f64
    }
}

/// Reparandum words that also occur somewhere in the span's repair.
pub fn copied_words(span: &DisfluencySpan, tokens: &[String]) -> usize {
    let repair: HashSet<&str> = span
        .repair
        .clone()
        .map(|r: Range<usize>| tokens[r].iter().map(String::as_str).collect())
        .unwrap_or_default();
    tokens[span.reparandum.clone()]
        .iter()
        .filter(|t| repair.contains(t.as_str()))
        .count()
}

pub fn corpus_stats(corpus: &[TokenSequence]) -> CorpusStats {
    let mut st = CorpusStats {
        sentences: corpus.len(),
        tokens: 0,
        disfluent_tokens: 0,
        spans: 0,
        spans_by_kind: BTreeMap::new(),
        reparandum_tokens: 0,
        copied_tokens: 0,
        distance_hist: vec![0.0; DISTANCE_BUCKETS],
    };
    let mut with_distance = 0usize;
    for seq in corpus {
        st.tokens += seq.len();
        st.disfluent_tokens += seq.disfluent_count();
        for span in &seq.spans {
            st.spans += 1;
            *st.spans_by_kind.entry(span.kind).or_default() += 1;
            st.reparandum_tokens += span.reparandum.len();
            st.copied_tokens += copied_words(span, &seq.tokens);
            if let Some(d) = span.copy_distance() {
                st.distance_hist[d.min(DISTANCE_BUCKETS - 1)] += 1.0;
                with_distance += 1;
            }
        }
    }
    for v in &mut st.distance_hist {
        *v /= with_distance.max(1) as f64;
    }
    st
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::annotate::{parse_annotated, write_annotated};

    fn cfg_with(n: usize, seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            seed,
            sentences: n,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn presets_validate() {
        for p in GENERATOR_PRESETS {
            GeneratorConfig::preset(p).unwrap().validate().unwrap();
        }
        Lexicon::english().validate().unwrap();
        assert!(Lexicon::english().content_word_count() >= 50);
        assert!(GeneratorConfig::preset("nope").is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = GeneratorConfig::default();
        c.kind_mix = [0.5, 0.5, 0.5];
        assert!(c.validate().is_err());
        let mut c = GeneratorConfig::default();
        c.distance_hist = vec![0.0; 3];
        assert!(c.validate().is_err());
        let mut c = GeneratorConfig::default();
        c.fluent_ratio = 1.5;
        assert!(generate_corpus(&c, &Lexicon::english()).is_err());
    }

    #[test]
    fn deterministic() {
        let c = cfg_with(50, 3);
        let lex = Lexicon::english();
        assert_eq!(generate_corpus(&c, &lex).unwrap(), generate_corpus(&c, &lex).unwrap());
        let other = generate_corpus(&cfg_with(50, 4), &lex).unwrap();
        assert_ne!(generate_corpus(&c, &lex).unwrap(), other);
    }

    #[test]
    fn sentences_are_valid_and_round_trip() {
        let lex = Lexicon::english();
        for p in GENERATOR_PRESETS {
            let mut c = GeneratorConfig::preset(p).unwrap();
            c.sentences = 300;
            for seq in generate_corpus(&c, &lex).unwrap() {
                seq.validate().unwrap();
                assert!(!seq.is_empty());
                let text = write_annotated(&seq);
                assert_eq!(parse_annotated(&text).unwrap(), seq, "{text}");
            }
        }
    }

    #[test]
    fn repetition_only_mix() {
        let mut c = cfg_with(300, 5);
        c.kind_mix = [1.0, 0.0, 0.0];
        c.fluent_ratio = 0.0;
        let corpus = generate_corpus(&c, &Lexicon::english()).unwrap();
        assert!(corpus
            .iter()
            .flat_map(|s| &s.spans)
            .all(|s| s.kind == DisfluencyKind::Repetition));
    }

    #[test]
    fn corrections_differ_from_repairs() {
        let mut c = cfg_with(300, 6);
        c.kind_mix = [0.0, 1.0, 0.0];
        c.fluent_ratio = 0.0;
        let corpus = generate_corpus(&c, &Lexicon::english()).unwrap();
        for seq in &corpus {
            assert_eq!(seq.spans[0].kind, DisfluencyKind::Correction);
        }
    }

    #[test]
    fn controller_hits_target() {
        let mut ctl = CopyController::default();
        ctl.record(4, 4);
        // Rate 1.0 so far; a length-4 correction should perturb all words.
        assert_eq!(ctl.perturb_count(4, 0.5), 4);
        let ctl = CopyController::default();
        assert_eq!(ctl.perturb_count(5, 0.6), 2);
        assert_eq!(ctl.perturb_count(1, 0.9), 1);
    }

    #[test]
    fn splits_are_distinct() {
        let mut c = GeneratorConfig::preset("rough-copy-hard").unwrap();
        c.sentences = 100;
        c.dev_sentences = 40;
        c.test_sentences = 40;
        let [tr, dv, te] = generate_splits(&c, &Lexicon::english()).unwrap();
        assert_eq!((tr.len(), dv.len(), te.len()), (100, 40, 40));
        assert_ne!(tr[..40], dv[..]);
        assert_ne!(dv, te);
    }

    #[test]
    fn stats_on_hand_corpus() {
        let corpus = vec![
            parse_annotated("i want a flight [ to boston + { uh i mean } to denver ] on friday").unwrap(),
            parse_annotated("[ they use that + ] i know").unwrap(),
        ];
        let st = corpus_stats(&corpus);
        assert_eq!(st.reparandum_tokens, 5);
        assert_eq!(st.copied_tokens, 1);
        assert_eq!(st.distance_hist[4], 1.0);
        assert_eq!(st.disfluent_tokens, 5);
        assert_eq!(st.tokens, 18);
    }
}
