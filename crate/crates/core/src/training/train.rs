use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{Label, TokenSequence, Vocabulary};
use crate::error::{Error, Result};
use crate::eval::{fmt_metric, score, EvalReport};
use crate::layers::softmax_xent_backward;
use crate::model::{Checkpoint, Network, ParamStore};
use crate::rng::Rng;
use crate::training::adam::{adam_step, AdamConfig};
use crate::training::loss::{l2_backward, l2_penalty, nll_sum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Sentences per minibatch.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub max_epochs: usize,
    /// Epochs without a dev F improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 25,
            learning_rate: 0.001,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            max_epochs: 60,
            patience: 5,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.batch_size >= 1
            && self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.adam_beta1)
            && (0.0..1.0).contains(&self.adam_beta2)
            && self.adam_eps > 0.0
            && self.max_epochs >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid training config {self:?}")))
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_precision: Option<f64>,
    pub dev_recall: Option<f64>,
    pub dev_f1: Option<f64>,
    pub best: bool,
    /// Excluded from equality-sensitive output; wall-clock only.
    #[serde(skip)]
    pub seconds: f64,
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "epoch={} train_loss={:.6} dev_p={} dev_r={} dev_f={} best={}",
            self.epoch,
            self.train_loss,
            fmt_metric(self.dev_precision),
            fmt_metric(self.dev_recall),
            fmt_metric(self.dev_f1),
            self.best
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: Checkpoint,
    pub best_epoch: usize,
    pub best_dev_f1: f64,
    pub log: Vec<EpochLog>,
}

impl TrainOutcome {
    /// Metric log as text, one line per epoch.
    pub fn log_text(&self) -> String {
        self.log.iter().map(|l| format!("{l}\n")).collect()
    }
}

pub struct Encoded {
    pub ids: Vec<Vec<usize>>,
    pub labels: Vec<Vec<usize>>,
}

pub fn encode_corpus(vocab: &Vocabulary, corpus: &[TokenSequence]) -> Encoded {
    let kept: Vec<&TokenSequence> = corpus.iter().filter(|s| !s.is_empty()).collect();
    Encoded {
        ids: kept.iter().map(|s| vocab.encode_seq(s)).collect(),
        labels: kept.iter().map(|s| s.label_indices()).collect(),
    }
}

/// Predicted labels for every sentence; empty sentences get empty labels.
pub fn tag_corpus(
    net: &Network,
    params: &ParamStore,
    vocab: &Vocabulary,
    corpus: &[TokenSequence],
) -> Result<Vec<Vec<Label>>> {
    corpus
        .iter()
        .map(|s| {
            if s.is_empty() {
                return Ok(Vec::new());
            }
            let pred = net.predict(params, &vocab.encode_seq(s))?;
            Ok(pred.into_iter().map(Label::from_index).collect())
        })
        .collect()
}

pub fn evaluate(
    net: &Network,
    params: &ParamStore,
    vocab: &Vocabulary,
    corpus: &[TokenSequence],
) -> Result<EvalReport> {
    score(corpus, &tag_corpus(net, params, vocab, corpus)?)
}

/// Mean per-token objective (NLL plus L2 penalty) over a corpus, dropout off.
pub fn corpus_loss(net: &Network, params: &ParamStore, data: &Encoded) -> Result<f64> {
    let mut rng = Rng::new(0);
    let mut total = 0.0;
    let mut tokens = 0usize;
    for (ids, labels) in data.ids.iter().zip(&data.labels) {
        let probs = net.forward(params, ids, false, &mut rng)?;
        total += nll_sum(&probs, labels)?;
        tokens += ids.len();
    }
    Ok(total / tokens.max(1) as f64 + l2_penalty(net, params))
}

/// Forward and backward over one batch, accumulating gradients. Returns the
/// batch objective: token-mean NLL plus the L2 penalty.
pub fn batch_step(
    net: &Network,
    params: &mut ParamStore,
    batch: &[(&[usize], &[usize])],
    dropout_rng: &mut Rng,
) -> Result<f64> {
    let tokens: usize = batch.iter().map(|(ids, _)| ids.len()).sum();
    let scale = 1.0 / tokens.max(1) as f64;
    let mut nll = 0.0;
    for &(ids, labels) in batch {
        let trace = net.forward_trace(params, ids, true, dropout_rng)?;
        nll += nll_sum(&trace.probs, labels)?;
        let dscores = softmax_xent_backward(&trace.probs, labels, scale)?;
        net.backward(params, &trace, &dscores)?;
    }
    l2_backward(net, params)?;
    let objective = nll * scale + l2_penalty(net, params);
    if !objective.is_finite() {
        return Err(Error::NonFinite("training loss".into()));
    }
    Ok(objective)
}

/// Minibatch Adam with per-epoch dev evaluation and patience-based early
/// stopping. On return `params` holds the best-dev parameters.
pub fn train(
    net: &Network,
    params: &mut ParamStore,
    vocab: &Vocabulary,
    train_set: &[TokenSequence],
    dev_set: &[TokenSequence],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if net.config().vocab_size < vocab.len() {
        return Err(Error::Mismatch(format!(
            "model embeds {} ids but the vocabulary has {}",
            net.config().vocab_size,
            vocab.len()
        )));
    }
    let data = encode_corpus(vocab, train_set);
    if data.ids.is_empty() {
        return Err(Error::EmptyCorpus("training corpus has no sentences".into()));
    }
    if dev_set.iter().all(|s| s.is_empty()) {
        return Err(Error::EmptyCorpus("dev corpus has no sentences".into()));
    }
    if dev_set.iter().all(|s| s.disfluent_count() == 0) {
        return Err(Error::Undefined(
            "dev corpus has no disfluent tokens, so F-score is undefined; add disfluent examples to the dev set".into(),
        ));
    }
    let mut master = Rng::new(cfg.seed);
    let mut shuffle_rng = master.fork();
    let mut dropout_rng = master.fork();
    let adam = cfg.adam();

    let mut order: Vec<usize> = (0..data.ids.len()).collect();
    let mut step = 0u64;
    let mut log = Vec::new();
    let mut best: Option<(Checkpoint, usize, f64)> = None;
    let mut stale = 0usize;
    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        shuffle_rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            params.zero_grads();
            let batch: Vec<(&[usize], &[usize])> = chunk
                .iter()
                .map(|&i| (data.ids[i].as_slice(), data.labels[i].as_slice()))
                .collect();
            loss_sum += batch_step(net, params, &batch, &mut dropout_rng)?;
            batches += 1;
            step += 1;
            adam_step(params, step, &adam)?;
        }
        let report = evaluate(net, params, vocab, dev_set)?;
        let f = report.f1.unwrap_or(0.0);
        let improved = best.as_ref().is_none_or(|(_, _, bf)| f > *bf);
        if improved {
            let ck = Checkpoint::from_params(net.config(), params, vocab.words().to_vec(), net.config().seed, step);
            best = Some((ck, epoch, f));
            stale = 0;
        } else {
            stale += 1;
        }
        let entry = EpochLog {
            epoch,
            train_loss: loss_sum / batches as f64,
            dev_precision: report.precision,
            dev_recall: report.recall,
            dev_f1: report.f1,
            best: improved,
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&entry);
        log.push(entry);
        if stale >= cfg.patience {
            break;
        }
    }
    let (ck, best_epoch, best_dev_f1) = best.expect("at least one epoch ran");
    params.load_values(ck.tensors.clone())?;
    Ok(TrainOutcome {
        best: ck,
        best_epoch,
        best_dev_f1,
        log,
    })
}
