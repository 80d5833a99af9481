//! CNN and ACNN taggers assembled from a declarative [`ModelConfig`].

mod checkpoint;
mod config;
mod count;
mod network;
mod params;

pub use checkpoint::{Checkpoint, TensorEntry, FORMAT_VERSION, MAGIC};
pub use checkpoint::write_atomic;
pub use config::{
    Arch, GroupCombine, KernelGroup, LayerConfig, LayerKind, ModelConfig, NUM_CLASSES, PRESETS,
};
pub use count::{
    alternate_reading, param_count, param_count_for_config, LayerCount, ParamReport,
    REFERENCE_TOTAL,
};
pub use network::{build, ForwardTrace, Network};
pub use params::{ParamId, ParamStore};
