use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Cnn,
    Acnn,
}

impl std::str::FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cnn" => Ok(Arch::Cnn),
            "acnn" => Ok(Arch::Acnn),
            other => Err(Error::Config(format!("unknown arch {other:?} (cnn|acnn)"))),
        }
    }
}

impl std::fmt::Display for Arch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Arch::Cnn => "cnn",
            Arch::Acnn => "acnn",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Autocorr,
}

/// How the outputs of a layer's kernel-size groups are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GroupCombine {
    /// Element-wise sum; each group emits `channels` features.
    #[default]
    Sum,
    /// Column-wise stacking; the layer emits `channels * groups` features.
    Concat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelGroup {
    pub ell: usize,
    pub r: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub kind: LayerKind,
    pub kernel_groups: Vec<KernelGroup>,
    /// Output channels of each group.
    pub channels: usize,
    #[serde(default)]
    pub combine: GroupCombine,
}

impl LayerConfig {
    pub fn new(kind: LayerKind, groups: &[(usize, usize)], channels: usize) -> Self {
        Self {
            kind,
            kernel_groups: groups.iter().map(|&(ell, r)| KernelGroup { ell, r }).collect(),
            channels,
            combine: GroupCombine::Sum,
        }
    }

    pub fn out_dim(&self) -> usize {
        match self.combine {
            GroupCombine::Sum => self.channels,
            GroupCombine::Concat => self.channels * self.kernel_groups.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub arch: Arch,
    pub embedding_dim: usize,
    pub vocab_size: usize,
    pub dropout_rate: f64,
    pub l2_weight: f64,
    pub layers: Vec<LayerConfig>,
    /// Multiplier on the scaled-uniform init half-width.
    #[serde(default = "one")]
    pub init_scale: f64,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

/// Output classes: fluent, disfluent.
pub const NUM_CLASSES: usize = 2;

/// Names accepted by [`ModelConfig::preset`].
pub const PRESETS: [&str; 4] = ["cnn-table1", "acnn-table1", "cnn-toy", "acnn-toy"];

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.embedding_dim == 0 || self.vocab_size < 2 {
            return bad(format!(
                "embedding_dim {} / vocab_size {} too small",
                self.embedding_dim, self.vocab_size
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate {} outside [0, 1)", self.dropout_rate));
        }
        // Written negated so NaN is rejected too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.l2_weight >= 0.0) || !(self.init_scale > 0.0) {
            return bad("l2_weight must be >= 0 and init_scale > 0".into());
        }
        if self.layers.is_empty() {
            return bad("at least one operator layer is required".into());
        }
        for (k, layer) in self.layers.iter().enumerate() {
            if layer.channels == 0 || layer.kernel_groups.is_empty() {
                return bad(format!("layer {} has no channels or kernel groups", k + 1));
            }
            if let Some(g) = layer.kernel_groups.iter().find(|g| g.r < 1) {
                return bad(format!("layer {} group {:?}: right width must be >= 1", k + 1, g));
            }
            let expected = match (self.arch, k) {
                (Arch::Acnn, 0) => LayerKind::Autocorr,
                _ => LayerKind::Conv,
            };
            if layer.kind != expected {
                return bad(format!(
                    "{} layer {} must be {:?}, found {:?}",
                    self.arch,
                    k + 1,
                    expected,
                    layer.kind
                ));
            }
        }
        Ok(())
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "cnn-table1" => Ok(Self::cnn_table1()),
            "acnn-table1" => Ok(Self::acnn_table1()),
            "cnn-toy" => Ok(Self::toy(Arch::Cnn)),
            "acnn-toy" => Ok(Self::toy(Arch::Acnn)),
            other => Err(Error::Config(format!(
                "unknown model preset {other:?}; expected one of {PRESETS:?}"
            ))),
        }
    }

    /// Placeholder vocabulary size for the full-size presets; training
    /// replaces it with the corpus vocabulary.
    pub const TABLE1_VOCAB: usize = 10_000;

    /// Full-size CNN: 570 kernels per layer over three sizes, stacked
    /// column-wise (190 per size).
    pub fn cnn_table1() -> Self {
        let layer = |groups: &[(usize, usize)]| LayerConfig {
            combine: GroupCombine::Concat,
            ..LayerConfig::new(LayerKind::Conv, groups, 190)
        };
        Self {
            name: "cnn-table1".into(),
            arch: Arch::Cnn,
            embedding_dim: 290,
            vocab_size: Self::TABLE1_VOCAB,
            dropout_rate: 0.51,
            l2_weight: 0.13,
            layers: vec![
                layer(&[(0, 1), (1, 1), (4, 4)]),
                layer(&[(1, 1), (2, 2), (3, 4)]),
                layer(&[(0, 1), (1, 2), (2, 3)]),
            ],
            init_scale: 1.0,
            seed: 1,
        }
    }

    /// Full-size ACNN: 120 kernels per layer over two sizes, stacked
    /// column-wise (60 per size).
    pub fn acnn_table1() -> Self {
        let layer = |kind, groups: &[(usize, usize)]| LayerConfig {
            combine: GroupCombine::Concat,
            ..LayerConfig::new(kind, groups, 60)
        };
        Self {
            name: "acnn-table1".into(),
            arch: Arch::Acnn,
            embedding_dim: 290,
            vocab_size: Self::TABLE1_VOCAB,
            dropout_rate: 0.53,
            l2_weight: 0.23,
            layers: vec![
                layer(LayerKind::Autocorr, &[(5, 6), (3, 3)]),
                layer(LayerKind::Conv, &[(4, 5), (2, 3)]),
                layer(LayerKind::Conv, &[(3, 4), (2, 2)]),
            ],
            init_scale: 1.0,
            seed: 1,
        }
    }

    /// Desk-scale model: embedding 32, 16 channels, summed groups. The CNN
    /// and ACNN variants differ only in the first layer's operator.
    pub fn toy(arch: Arch) -> Self {
        let first = match arch {
            Arch::Cnn => LayerKind::Conv,
            Arch::Acnn => LayerKind::Autocorr,
        };
        Self {
            name: format!("{arch}-toy"),
            arch,
            embedding_dim: 32,
            vocab_size: 1000,
            dropout_rate: 0.1,
            l2_weight: 0.01,
            layers: vec![
                LayerConfig::new(first, &[(2, 6), (1, 2)], 16),
                LayerConfig::new(LayerKind::Conv, &[(3, 3), (1, 1)], 16),
                LayerConfig::new(LayerKind::Conv, &[(2, 2), (1, 1)], 16),
            ],
            init_scale: 1.0,
            seed: 1,
        }
    }

    /// Same skeleton with the first layer's operator switched to `arch`.
    pub fn with_arch(&self, arch: Arch) -> Self {
        let mut c = self.clone();
        c.arch = arch;
        if let Some(first) = c.layers.first_mut() {
            first.kind = match arch {
                Arch::Cnn => LayerKind::Conv,
                Arch::Acnn => LayerKind::Autocorr,
            };
        }
        c
    }
}
