//! Token-level scoring, per-kind breakdown, error listings and the embedding
//! similarity diagnostic.

mod heatmap;
mod listing;
mod score;

pub use heatmap::{cosine, copy_pair_similarity, similarity_heatmap, CopySimilarity, Heatmap};
pub use listing::{error_listing, format_error, mark_tokens, parse_marked};
pub use score::{fmt_metric, score, score_by_kind, score_corpora, Counts, EvalReport, SentenceErrors};
