//! Convolutional and auto-correlational sequence taggers for disfluency
//! detection, built on a small dense tensor type with hand-written backward
//! passes.

pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod gradcheck;
pub mod layers;
pub mod model;
pub mod rng;
pub mod tensor;
pub mod training;

pub use data::{DisfluencyKind, DisfluencySpan, Label, TokenSequence, Vocabulary};
pub use error::{Error, Result};
pub use eval::EvalReport;
pub use model::{Arch, Checkpoint, ModelConfig, Network, ParamStore};
pub use rng::Rng;
pub use tensor::Tensor;
pub use training::TrainConfig;
