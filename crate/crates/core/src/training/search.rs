use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::fmt_metric;
use crate::model::{KernelGroup, ModelConfig};
use crate::rng::Rng;
use crate::training::train::TrainConfig;

/// Sampling ranges for randomized search. Scalars are drawn uniformly,
/// `*_log10` ranges log-uniformly, lists uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub embedding_dim: Vec<usize>,
    pub dropout: (f64, f64),
    pub l2_log10: (f64, f64),
    pub channels: Vec<usize>,
    pub max_ell: usize,
    pub max_r: usize,
    pub learning_rate_log10: (f64, f64),
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            embedding_dim: vec![16, 24, 32, 48],
            dropout: (0.0, 0.5),
            l2_log10: (-3.0, -0.5),
            channels: vec![8, 12, 16, 24],
            max_ell: 4,
            max_r: 6,
            learning_rate_log10: (-3.3, -2.0),
        }
    }
}

impl SearchSpace {
    pub fn sample(&self, base: &ModelConfig, train: &TrainConfig, rng: &mut Rng) -> Result<(ModelConfig, TrainConfig)> {
        if self.embedding_dim.is_empty() || self.channels.is_empty() || self.max_r == 0 {
            return Err(Error::Config("search space has an empty range".into()));
        }
        let uniform = |rng: &mut Rng, (lo, hi): (f64, f64)| lo + (hi - lo) * rng.unit();
        let mut m = base.clone();
        m.embedding_dim = *rng.choose(&self.embedding_dim);
        m.dropout_rate = uniform(rng, self.dropout).min(0.95);
        m.l2_weight = 10f64.powf(uniform(rng, self.l2_log10));
        for layer in &mut m.layers {
            layer.channels = *rng.choose(&self.channels);
            for g in &mut layer.kernel_groups {
                *g = KernelGroup {
                    ell: rng.range_inclusive(0, self.max_ell),
                    r: rng.range_inclusive(1, self.max_r),
                };
            }
        }
        let mut t = train.clone();
        t.learning_rate = 10f64.powf(uniform(rng, self.learning_rate_log10));
        t.seed = rng.next_u64();
        m.seed = rng.next_u64();
        m.validate()?;
        t.validate()?;
        Ok((m, t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trial {
    pub index: usize,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub dev_f1: Option<f64>,
}

/// Trial 0 is the base configuration; the remaining `budget - 1` trials are
/// sampled from `space` with a stream seeded by `seed`.
pub fn sample_trials(
    space: &SearchSpace,
    base: &ModelConfig,
    train: &TrainConfig,
    budget: usize,
    seed: u64,
) -> Result<Vec<(ModelConfig, TrainConfig)>> {
    if budget == 0 {
        return Err(Error::Config("search budget must be at least 1".into()));
    }
    let mut rng = Rng::new(seed);
    let mut out = vec![(base.clone(), train.clone())];
    for _ in 1..budget {
        out.push(space.sample(base, train, &mut rng)?);
    }
    Ok(out)
}

/// Runs every trial through `run` (which trains and returns dev F) and
/// ranks by dev F, best first; undefined F ranks last.
pub fn random_search<F>(
    space: &SearchSpace,
    base: &ModelConfig,
    train: &TrainConfig,
    budget: usize,
    seed: u64,
    mut run: F,
) -> Result<Vec<Trial>>
where
    F: FnMut(&ModelConfig, &TrainConfig) -> Result<Option<f64>>,
{
    let mut trials = Vec::with_capacity(budget);
    for (index, (model, tc)) in sample_trials(space, base, train, budget, seed)?.into_iter().enumerate() {
        let dev_f1 = run(&model, &tc)?;
        trials.push(Trial {
            index,
            model,
            train: tc,
            dev_f1,
        });
    }
    trials.sort_by(|a, b| {
        b.dev_f1
            .unwrap_or(f64::NEG_INFINITY)
            .total_cmp(&a.dev_f1.unwrap_or(f64::NEG_INFINITY))
            .then(a.index.cmp(&b.index))
    });
    Ok(trials)
}

/// Tab-separated trial table.
pub fn trial_table(trials: &[Trial]) -> String {
    let mut out = String::from("rank\ttrial\tdev_f1\tembedding_dim\tdropout\tl2\tlearning_rate\tchannels\tkernels\tmodel_seed\ttrain_seed\n");
    for (rank, t) in trials.iter().enumerate() {
        let channels: Vec<String> = t.model.layers.iter().map(|l| l.channels.to_string()).collect();
        let kernels: Vec<String> = t
            .model
            .layers
            .iter()
            .map(|l| {
                l.kernel_groups
                    .iter()
                    .map(|g| format!("{}:{}", g.ell, g.r))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.4}\t{:.6}\t{:.6}\t{}\t{}\t{}\t{}",
            rank + 1,
            t.index,
            fmt_metric(t.dev_f1),
            t.model.embedding_dim,
            t.model.dropout_rate,
            t.model.l2_weight,
            t.train.learning_rate,
            channels.join("/"),
            kernels.join("/"),
            t.model.seed,
            t.train.seed
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Arch;

    #[test]
    fn budget_one_is_base_config() {
        let base = ModelConfig::toy(Arch::Acnn);
        let tc = TrainConfig::default();
        let trials = sample_trials(&SearchSpace::default(), &base, &tc, 1, 3).unwrap();
        assert_eq!(trials, vec![(base, tc)]);
        assert!(sample_trials(&SearchSpace::default(), &ModelConfig::toy(Arch::Cnn), &TrainConfig::default(), 0, 3).is_err());
    }

    #[test]
    fn samples_are_valid_and_reproducible() {
        let space = SearchSpace::default();
        for arch in [Arch::Cnn, Arch::Acnn] {
            let base = ModelConfig::toy(arch);
            let a = sample_trials(&space, &base, &TrainConfig::default(), 20, 7).unwrap();
            let b = sample_trials(&space, &base, &TrainConfig::default(), 20, 7).unwrap();
            assert_eq!(a, b);
            for (m, t) in &a {
                m.validate().unwrap();
                t.validate().unwrap();
            }
        }
    }

    #[test]
    fn ranking() {
        let base = ModelConfig::toy(Arch::Cnn);
        let mut scores = vec![Some(0.5), None, Some(0.9), Some(0.7)].into_iter();
        let trials = random_search(&SearchSpace::default(), &base, &TrainConfig::default(), 4, 1, |_, _| {
            Ok(scores.next().unwrap())
        })
        .unwrap();
        let order: Vec<usize> = trials.iter().map(|t| t.index).collect();
        assert_eq!(order, vec![2, 3, 0, 1]);
        let table = trial_table(&trials);
        assert_eq!(table.lines().count(), 5);
        assert!(table.lines().last().unwrap().contains("NA"));
    }
}
