//! Annotated corpora: parsing, preprocessing, vocabulary, file formats and
//! the synthetic generator.

mod annotate;
mod generator;
mod io;
mod preprocess;
mod sequence;
mod vocab;

pub use annotate::{parse_annotated, write_annotated};
pub use generator::{
    copied_words, corpus_stats, generate_corpus, generate_splits, generate_with, CorpusStats,
    GeneratorConfig, Lexicon, DISTANCE_BUCKETS, GENERATOR_PRESETS,
};
pub use io::{
    format_corpus, format_tabular_sentence, parse_corpus, read_corpus, write_corpus,
    CorpusFormat, DISFLUENT_MARK, FLUENT_MARK, PARTIAL_MARK,
};
pub use preprocess::{is_partial_word, is_punctuation, preprocess, preprocess_corpus, PUNCTUATION};
pub use sequence::{classify_span, DisfluencyKind, DisfluencySpan, Label, TokenSequence};
pub use vocab::{build_vocab, Vocabulary, PAD, PAD_TOKEN, UNK, UNK_TOKEN};
