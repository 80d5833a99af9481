//! CNN versus ACNN comparison on a synthetic corpus, several seeds each.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::Serialize;

use crate::data::{build_vocab, generate_splits, DisfluencyKind, GeneratorConfig, Lexicon, TokenSequence, Vocabulary};
use crate::error::{Error, Result};
use crate::eval::{copy_pair_similarity, fmt_metric, CopySimilarity};
use crate::model::{build, Arch, ModelConfig, Network, ParamStore};
use crate::rng::Rng;
use crate::training::{evaluate, train, EpochLog, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbConfig {
    pub corpus: GeneratorConfig,
    /// Skeleton shared by both arms; the first layer's operator is set per arm.
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    /// Random pairs drawn for the similarity diagnostic.
    pub random_pairs: usize,
}

impl AbConfig {
    pub fn new(corpus_preset: &str, seeds: Vec<u64>) -> Result<Self> {
        Ok(Self {
            corpus: GeneratorConfig::preset(corpus_preset)?,
            model: ModelConfig::toy(Arch::Acnn),
            train: TrainConfig::default(),
            seeds,
            random_pairs: 20_000,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.len() < 3 {
            return Err(Error::Config(format!(
                "A/B comparison needs at least 3 seeds, got {}",
                self.seeds.len()
            )));
        }
        self.corpus.validate()?;
        self.train.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmResult {
    pub arch: Arch,
    pub seed: u64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: f64,
    pub kind_f1: BTreeMap<DisfluencyKind, Option<f64>>,
    pub epochs: usize,
    pub best_epoch: usize,
    pub similarity: CopySimilarity,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbReport {
    pub cnn: Vec<ArmResult>,
    pub acnn: Vec<ArmResult>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

impl AbReport {
    pub fn mean_f1(&self, arch: Arch) -> f64 {
        mean(self.arm(arch).iter().map(|r| r.f1))
    }

    /// Mean over seeds where the kind's F is defined.
    pub fn mean_kind_f1(&self, arch: Arch, kind: DisfluencyKind) -> Option<f64> {
        let v: Vec<f64> = self
            .arm(arch)
            .iter()
            .filter_map(|r| r.kind_f1.get(&kind).copied().flatten())
            .collect();
        (!v.is_empty()).then(|| mean(v.into_iter()))
    }

    pub fn gap(&self) -> f64 {
        self.mean_f1(Arch::Acnn) - self.mean_f1(Arch::Cnn)
    }

    pub fn arm(&self, arch: Arch) -> &[ArmResult] {
        match arch {
            Arch::Cnn => &self.cnn,
            Arch::Acnn => &self.acnn,
        }
    }

    pub fn mean_similarity(&self, arch: Arch) -> (f64, f64, f64) {
        let a = self.arm(arch);
        (
            mean(a.iter().map(|r| r.similarity.copy_mean)),
            mean(a.iter().map(|r| r.similarity.distinct_copy_mean)),
            mean(a.iter().map(|r| r.similarity.random_mean)),
        )
    }
}

impl fmt::Display for AbReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{:.2}", 100.0 * x));
        writeln!(f, "seed\tarch\tP\tR\tF\trep_F\tcor_F\tres_F\tbest_epoch\tepochs")?;
        for r in self.cnn.iter().chain(&self.acnn) {
            let k = |kind| pct(r.kind_f1.get(&kind).copied().flatten());
            writeln!(
                f,
                "{}\t{}\t{}\t{}\t{:.2}\t{}\t{}\t{}\t{}\t{}",
                r.seed,
                r.arch,
                pct(r.precision),
                pct(r.recall),
                100.0 * r.f1,
                k(DisfluencyKind::Repetition),
                k(DisfluencyKind::Correction),
                k(DisfluencyKind::Restart),
                r.best_epoch,
                r.epochs
            )?;
        }
        for arch in [Arch::Cnn, Arch::Acnn] {
            let (c, d, rnd) = self.mean_similarity(arch);
            writeln!(
                f,
                "mean {arch}: F={:.2} rep_F={} cor_F={} res_F={} copy_cos={c:.3} distinct_copy_cos={d:.3} random_cos={rnd:.3}",
                100.0 * self.mean_f1(arch),
                pct(self.mean_kind_f1(arch, DisfluencyKind::Repetition)),
                pct(self.mean_kind_f1(arch, DisfluencyKind::Correction)),
                pct(self.mean_kind_f1(arch, DisfluencyKind::Restart)),
            )?;
        }
        write!(f, "mean gap (acnn - cnn): {:+.2} F", 100.0 * self.gap())
    }
}

/// Trains one arm and scores it on `dev`.
#[allow(clippy::too_many_arguments)]
pub fn run_arm(
    skeleton: &ModelConfig,
    arch: Arch,
    seed: u64,
    train_cfg: &TrainConfig,
    vocab: &Vocabulary,
    train_set: &[TokenSequence],
    dev_set: &[TokenSequence],
    random_pairs: usize,
    on_epoch: impl FnMut(&EpochLog),
) -> Result<(ArmResult, Network, ParamStore)> {
    let started = Instant::now();
    let mut model = skeleton.with_arch(arch);
    model.name = format!("{arch}-ab");
    model.vocab_size = vocab.len();
    model.seed = seed;
    let (net, mut params) = build(&model, &mut Rng::new(seed))?;
    let tc = TrainConfig {
        seed,
        ..train_cfg.clone()
    };
    let outcome = train(&net, &mut params, vocab, train_set, dev_set, &tc, on_epoch)?;
    let report = evaluate(&net, &params, vocab, dev_set)?;
    let similarity = copy_pair_similarity(
        params.value(net.embedding_id()),
        vocab,
        dev_set,
        random_pairs,
        &mut Rng::new(seed ^ 0x5eed),
    )?;
    let result = ArmResult {
        arch,
        seed,
        precision: report.precision,
        recall: report.recall,
        f1: report.f1.unwrap_or(0.0),
        kind_f1: DisfluencyKind::ALL
            .iter()
            .map(|&k| (k, report.kind_f1(k)))
            .collect(),
        epochs: outcome.log.len(),
        best_epoch: outcome.best_epoch,
        similarity,
        seconds: started.elapsed().as_secs_f64(),
    };
    Ok((result, net, params))
}

/// Generates the corpus once, then trains both architectures for every seed.
pub fn run_ab(cfg: &AbConfig, mut progress: impl FnMut(&str)) -> Result<AbReport> {
    cfg.validate()?;
    let [train_set, dev_set, _] = generate_splits(&cfg.corpus, &Lexicon::english())?;
    let vocab = build_vocab(&train_set, 1)?;
    let mut report = AbReport {
        cnn: Vec::new(),
        acnn: Vec::new(),
    };
    for &seed in &cfg.seeds {
        for arch in [Arch::Cnn, Arch::Acnn] {
            let (r, _, _) = run_arm(
                &cfg.model,
                arch,
                seed,
                &cfg.train,
                &vocab,
                &train_set,
                &dev_set,
                cfg.random_pairs,
                |e| progress(&format!("{arch} seed={seed} {e}")),
            )?;
            progress(&format!(
                "{arch} seed={seed} done: dev F={} in {:.1}s",
                fmt_metric(Some(r.f1)),
                r.seconds
            ));
            match arch {
                Arch::Cnn => report.cnn.push(r),
                Arch::Acnn => report.acnn.push(r),
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn needs_three_seeds() {
        let cfg = AbConfig::new("rough-copy-hard", vec![1]).unwrap();
        assert!(matches!(run_ab(&cfg, |_| {}), Err(Error::Config(_))));
    }

    #[test]
    fn small_run_is_reproducible() {
        let mut cfg = AbConfig::new("rough-copy-hard", vec![1, 2, 3]).unwrap();
        cfg.corpus.sentences = 40;
        cfg.corpus.dev_sentences = 20;
        cfg.model.embedding_dim = 4;
        for l in &mut cfg.model.layers {
            l.channels = 2;
        }
        cfg.train.max_epochs = 1;
        cfg.random_pairs = 10;
        // Wall-clock time is the only field allowed to differ.
        let untimed = |mut r: AbReport| {
            for arm in r.cnn.iter_mut().chain(r.acnn.iter_mut()) {
                arm.seconds = 0.0;
            }
            r
        };
        let a = untimed(run_ab(&cfg, |_| {}).unwrap());
        let b = untimed(run_ab(&cfg, |_| {}).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.cnn.len(), 3);
        assert!(a.to_string().contains("mean gap"));
    }
}
