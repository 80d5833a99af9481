//! Parameter counting, split into the embedding table and network weights.

use std::fmt;

use crate::model::config::{GroupCombine, LayerKind, ModelConfig, NUM_CLASSES};
use crate::model::network::Network;
use crate::model::params::ParamStore;

/// Parameter count reported for both full-size models in the reference
/// configuration table; shown for comparison only.
pub const REFERENCE_TOTAL: usize = 4_900_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerCount {
    pub name: String,
    pub a_kernels: usize,
    pub b_kernels: usize,
    pub biases: usize,
}

impl LayerCount {
    pub fn total(&self) -> usize {
        self.a_kernels + self.b_kernels + self.biases
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamReport {
    pub model: String,
    pub vocab_size: usize,
    pub embedding: usize,
    pub layers: Vec<LayerCount>,
}

impl ParamReport {
    pub fn network(&self) -> usize {
        self.layers.iter().map(LayerCount::total).sum()
    }

    pub fn total(&self) -> usize {
        self.embedding + self.network()
    }

    /// Vocabulary size at which the embedding-inclusive total would equal `target`.
    pub fn implied_vocab(&self, target: usize, embedding_dim: usize) -> Option<usize> {
        target
            .checked_sub(self.network())
            .map(|rest| rest / embedding_dim.max(1))
    }
}

/// Counts from a built parameter store.
pub fn param_count(net: &Network, params: &ParamStore) -> ParamReport {
    let cfg = net.config();
    let mut layers = Vec::new();
    for (k, plan) in net.layer_plans().iter().enumerate() {
        let mut lc = LayerCount {
            name: format!("layer{} ({:?})", k + 1, cfg.layers[k].kind).to_lowercase(),
            a_kernels: 0,
            b_kernels: 0,
            biases: 0,
        };
        for g in &plan.groups {
            lc.a_kernels += params.value(g.a).len();
            lc.b_kernels += g.b_kernel.map_or(0, |b| params.value(b).len());
            lc.biases += params.value(g.bias).len();
        }
        layers.push(lc);
    }
    let out_w = params.value(net.output_weight_id()).len();
    layers.push(LayerCount {
        name: "output (width-1)".into(),
        a_kernels: out_w,
        b_kernels: 0,
        biases: NUM_CLASSES,
    });
    ParamReport {
        model: cfg.name.clone(),
        vocab_size: cfg.vocab_size,
        embedding: params.value(net.embedding_id()).len(),
        layers,
    }
}

/// Counts by shape arithmetic alone, without allocating the model.
pub fn param_count_for_config(cfg: &ModelConfig) -> ParamReport {
    let mut in_dim = cfg.embedding_dim;
    let mut layers = Vec::new();
    for (k, layer) in cfg.layers.iter().enumerate() {
        let c = layer.channels;
        let mut lc = LayerCount {
            name: format!("layer{} ({:?})", k + 1, layer.kind).to_lowercase(),
            a_kernels: 0,
            b_kernels: 0,
            biases: 0,
        };
        for g in &layer.kernel_groups {
            let w = g.ell + g.r + 1;
            lc.a_kernels += c * w * in_dim;
            if layer.kind == LayerKind::Autocorr {
                lc.b_kernels += c * w * w * in_dim;
            }
            lc.biases += c;
        }
        layers.push(lc);
        in_dim = layer.out_dim();
    }
    layers.push(LayerCount {
        name: "output (width-1)".into(),
        a_kernels: NUM_CLASSES * in_dim,
        b_kernels: 0,
        biases: NUM_CLASSES,
    });
    ParamReport {
        model: cfg.name.clone(),
        vocab_size: cfg.vocab_size,
        embedding: cfg.vocab_size * cfg.embedding_dim,
        layers,
    }
}

/// The same skeleton read the other way: groups summed with `channels *
/// groups` kernels each instead of stacked, or vice versa.
pub fn alternate_reading(cfg: &ModelConfig) -> ModelConfig {
    let mut alt = cfg.clone();
    for layer in &mut alt.layers {
        let groups = layer.kernel_groups.len();
        match layer.combine {
            GroupCombine::Concat => {
                layer.channels *= groups;
                layer.combine = GroupCombine::Sum;
            }
            GroupCombine::Sum => {
                layer.channels = (layer.channels / groups).max(1);
                layer.combine = GroupCombine::Concat;
            }
        }
    }
    alt.name = format!("{} (alternate grouping)", cfg.name);
    alt
}

impl fmt::Display for ParamReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model: {}", self.model)?;
        writeln!(f, "{:<22}{:>12}{:>12}{:>10}{:>12}", "block", "A/W", "B", "bias", "total")?;
        for l in &self.layers {
            writeln!(
                f,
                "{:<22}{:>12}{:>12}{:>10}{:>12}",
                l.name,
                l.a_kernels,
                l.b_kernels,
                l.biases,
                l.total()
            )?;
        }
        writeln!(f, "network (excl. embedding): {}", self.network())?;
        writeln!(f, "embedding ({} x vocab {}): {}", self.embedding / self.vocab_size.max(1), self.vocab_size, self.embedding)?;
        write!(f, "total (incl. embedding): {}", self.total())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build;
    use crate::model::config::{Arch, LayerConfig};
    use crate::rng::Rng;

    fn single_autocorr() -> ModelConfig {
        ModelConfig {
            name: "single".into(),
            arch: Arch::Acnn,
            embedding_dim: 3,
            vocab_size: 5,
            dropout_rate: 0.0,
            l2_weight: 0.0,
            layers: vec![LayerConfig::new(LayerKind::Autocorr, &[(1, 1)], 1)],
            init_scale: 1.0,
            seed: 0,
        }
    }

    #[test]
    fn single_channel_autocorr_layer_count() {
        let cfg = single_autocorr();
        let (net, params) = build(&cfg, &mut Rng::new(0)).unwrap();
        let r = param_count(&net, &params);
        let (w, m) = (3, 3);
        assert_eq!(r.layers[0].total(), w * m + w * w * m + 1);
        assert_eq!(r.embedding, 15);
        assert_eq!(r.layers[1].total(), 2 * 1 + 2);
        assert_eq!(r, param_count_for_config(&cfg));
        assert_eq!(r.total(), params.total_len());
    }

    #[test]
    fn arithmetic_matches_built_models() {
        for arch in [Arch::Cnn, Arch::Acnn] {
            let cfg = ModelConfig::toy(arch);
            let (net, params) = build(&cfg, &mut Rng::new(1)).unwrap();
            assert_eq!(param_count(&net, &params), param_count_for_config(&cfg));
        }
    }

    #[test]
    fn table1_models_have_similar_size() {
        let cnn = param_count_for_config(&ModelConfig::cnn_table1()).network() as f64;
        let acnn = param_count_for_config(&ModelConfig::acnn_table1()).network() as f64;
        assert!((cnn - acnn).abs() / cnn.max(acnn) < 0.25, "{cnn} vs {acnn}");
    }

    #[test]
    fn alternate_reading_round_trips() {
        let cfg = ModelConfig::acnn_table1();
        let back = alternate_reading(&alternate_reading(&cfg));
        assert_eq!(back.layers, cfg.layers);
    }
}
