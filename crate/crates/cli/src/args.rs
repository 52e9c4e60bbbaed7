use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hare_core::extract::ThresholdMode;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "hare", version, about = "Entity- and relation-alignment scoring for clinical reports")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one candidate report against one reference report.
    Score(ScoreArgs),
    /// Score every (ref_id, cand_id) pair of a manifest.
    Batch(BatchArgs),
    /// Correlate metric scores with expert ratings.
    Compare(CompareArgs),
    /// Run the confidence-threshold ablation over a manifest and compare each
    /// variant with expert ratings.
    Ablate(AblateArgs),
    /// Build relation-classification pairs and length-bounded sentence chunks.
    Prep(PrepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExtractorChoice {
    /// Built-in gazetteer tagger and proximity linker.
    Gazetteer,
    /// Predicted annotation files.
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderChoice {
    Hashed,
    Store,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum StoreFallback {
    Hashed,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MatchChoice {
    Soft,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    Train,
    Test,
}

/// Flags shared by every command. Each overrides the matching key of the
/// `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML file with default values for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads. Output is identical for any value.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Confidence threshold for entities (and relations unless
    /// --relation-threshold is given).
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub relation_threshold: Option<f64>,
    /// above | below | none
    #[arg(long, value_parser = parse_threshold_mode)]
    pub threshold_mode: Option<ThresholdMode>,
    /// Minimum endpoint similarity for relation alignment.
    #[arg(long)]
    pub align_tau: Option<f64>,
    #[arg(long, value_enum)]
    pub relation_match: Option<MatchChoice>,
    #[arg(long, value_enum)]
    pub embedder: Option<EmbedderChoice>,
    /// Behaviour of the vector store on a missing key.
    #[arg(long, value_enum)]
    pub store_fallback: Option<StoreFallback>,
    #[arg(long, value_enum)]
    pub extractor: Option<ExtractorChoice>,
    /// Drop reports whose expert score is 0 before comparing.
    #[arg(long, num_args = 0..=1, require_equals = true, default_missing_value = "true")]
    pub exclude_zero: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Line-delimited report records.
    #[arg(long)]
    pub reports: Option<PathBuf>,
    /// Extra report records for candidates, merged with --reports.
    #[arg(long)]
    pub cand_reports: Option<PathBuf>,
    #[arg(long)]
    pub ref_annotations: Option<PathBuf>,
    /// Defaults to --ref-annotations.
    #[arg(long)]
    pub cand_annotations: Option<PathBuf>,
    /// Lexicon directory; the built-in lexicons are used when absent.
    #[arg(long)]
    pub gazetteer: Option<PathBuf>,
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Linker token window.
    #[arg(long)]
    pub window: Option<usize>,
}

fn parse_threshold_mode(s: &str) -> Result<ThresholdMode, String> {
    s.parse()
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Reference report: an id in --reports, or a plain-text file.
    pub reference: String,
    /// Candidate report: an id in --reports, or a plain-text file.
    pub candidate: String,
    /// Id for a plain-text reference file. Defaults to the file stem.
    #[arg(long)]
    pub ref_id: Option<String>,
    /// Id for a plain-text candidate file. Defaults to the file stem.
    #[arg(long)]
    pub cand_id: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// CSV with header `ref_id,cand_id`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// CSV with header `report_id,score`.
    #[arg(long)]
    pub expert: Option<PathBuf>,
    /// Metric files: CSV `report_id,<metric>,...` or breakdown `.jsonl`.
    pub metrics: Vec<PathBuf>,
    /// Normalizer per metric, `name=max`. Breakdown files default to 2,
    /// CSV metrics to 1.
    #[arg(long = "normalize")]
    pub normalize: Vec<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub expert: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    /// Gold annotations (confidence 1.0 throughout).
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "train")]
    pub mode: ModeChoice,
    /// Maximum tokens per sentence chunk.
    #[arg(long, default_value_t = 512)]
    pub max_tokens: usize,
    #[command(flatten)]
    pub common: Common,
}
