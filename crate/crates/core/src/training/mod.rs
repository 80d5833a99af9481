//! Loss, L2 penalty, Adam, the minibatch training loop and randomized search.

mod adam;
mod check;
mod loss;
mod search;
mod train;

pub use adam::{adam_step, AdamConfig};
pub use check::{check_gradients, sentence_gradients, sentence_objective};
pub use loss::{l2_backward, l2_penalty, loss, nll_sum};
pub use search::{random_search, sample_trials, trial_table, SearchSpace, Trial};
pub use train::{
    batch_step, corpus_loss, encode_corpus, evaluate, tag_corpus, train, Encoded, EpochLog,
    TrainConfig, TrainOutcome,
};
