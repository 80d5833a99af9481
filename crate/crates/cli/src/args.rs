use std::path::PathBuf;

use acnn_core::data::CorpusFormat;
use acnn_core::model::Arch;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "acnn", version, about = "CNN and auto-correlation CNN taggers for speech disfluencies")]
pub struct Cli {
    /// Default directory for corpora and run outputs.
    #[arg(long, global = true, env = "ACNN_DATA_DIR", default_value = "data")]
    pub data_dir: PathBuf,

    /// Worker threads for evaluation and search trials; training is always single-threaded.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    /// Where to write the run manifest (default: next to the main artifact).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate train/dev/test splits of a synthetic corpus.
    Synth(SynthArgs),
    /// Train a tagger with early stopping on dev F.
    Train(TrainArgs),
    /// Label tokens with a trained checkpoint.
    Tag(TagArgs),
    /// Score predicted labels against gold labels.
    Eval(EvalArgs),
    /// Finite-difference check of every parameter gradient of a small model.
    Gradcheck(GradcheckArgs),
    /// Train CNN and ACNN over several seeds and compare dev F.
    AbBench(AbBenchArgs),
    /// Randomized hyperparameter search.
    Search(SearchArgs),
    /// Parameter counts of a model preset.
    Params(ParamsArgs),
    /// Cosine-similarity heatmap of a sentence's embeddings.
    Heatmap(HeatmapArgs),
    /// Re-run the command recorded in a manifest and compare outputs.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator preset: switchboard-like or rough-copy-hard.
    #[arg(long, default_value = "switchboard-like")]
    pub preset: String,
    /// TOML file whose [generator] table overrides the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train_sentences: Option<usize>,
    #[arg(long)]
    pub dev_sentences: Option<usize>,
    #[arg(long)]
    pub test_sentences: Option<usize>,
    /// Output directory (default: <data-dir>/<preset>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "bracket")]
    pub format: CorpusFormat,
}

#[derive(Debug, Args, Clone)]
pub struct ModelOverrides {
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    /// Kernels per group in every operator layer.
    #[arg(long)]
    pub channels: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value = "acnn")]
    pub arch: Arch,
    /// Model preset: toy, table1, or a full name such as acnn-toy.
    #[arg(long, default_value = "toy")]
    pub preset: String,
    /// TOML file with [model] and [train] tables overriding the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training corpus (default: <data-dir>/train.txt).
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Dev corpus (default: <data-dir>/dev.txt).
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Corpus format; inferred from the extension when omitted.
    #[arg(long)]
    pub format: Option<CorpusFormat>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub min_freq: usize,
    /// Output directory (default: <data-dir>/runs/<model>-seed<seed>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ModelOverrides,
}

#[derive(Debug, Args)]
pub struct TagArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub format: Option<CorpusFormat>,
    /// Tabular output file (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold_format: Option<CorpusFormat>,
    #[arg(long)]
    pub pred_format: Option<CorpusFormat>,
    /// Sentences to list with gold/predicted marks.
    #[arg(long, default_value_t = 10)]
    pub errors: usize,
    /// Also write the report as tab-separated values.
    #[arg(long)]
    pub tsv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value = "acnn")]
    pub arch: Arch,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub embedding_dim: usize,
    #[arg(long, default_value_t = 3)]
    pub channels: usize,
    #[arg(long, default_value_t = 9)]
    pub vocab: usize,
    /// Sentence length.
    #[arg(long, default_value_t = 6)]
    pub len: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Test hook: perturb the analytic gradient of this tensor.
    #[arg(long, hide = true)]
    pub corrupt: Option<String>,
}

#[derive(Debug, Args)]
pub struct AbBenchArgs {
    #[arg(long, default_value = "rough-copy-hard")]
    pub preset: String,
    /// Comma-separated seeds (at least 3).
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub seeds: Vec<u64>,
    /// TOML file with [generator], [model] and [train] tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ModelOverrides,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, default_value = "acnn")]
    pub arch: Arch,
    #[arg(long, default_value = "toy")]
    pub preset: String,
    #[arg(long, default_value_t = 8)]
    pub budget: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<CorpusFormat>,
    /// Trial table output (default: <data-dir>/search-<arch>.tsv).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ModelOverrides,
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    /// Model presets to report.
    #[arg(default_values_t = ["cnn-table1".to_string(), "acnn-table1".to_string()])]
    pub presets: Vec<String>,
    /// Also show the alternate kernel-group reading.
    #[arg(long)]
    pub alternate: bool,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Sentence to render, tokens separated by spaces.
    #[arg(long)]
    pub sentence: String,
    /// Grayscale PGM output.
    #[arg(long)]
    pub pgm: Option<PathBuf>,
    /// Pixels per cell in the PGM.
    #[arg(long, default_value_t = 16)]
    pub cell: usize,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest_path: PathBuf,
}
