use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "codesift",
    version,
    about = "Filter, rank and repair generated code suggestions",
    after_help = "Exit codes: 0 success, 1 per-prompt failure in the report, 2 configuration or input error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run generate, filter, score, rank and repair over a dataset.
    Pipeline(PipelineArgs),
    /// Clean and syntax-gate a SuggestionInventory (JSON on stdin).
    Filter(FilterArgs),
    /// Score and rank an EligibleSet (JSON on stdin).
    Rank(RankArgs),
    /// Build the repair prompt for the top entry of a RankedInventory (JSON on stdin).
    #[command(name = "repair-prompt")]
    RepairPrompt(RepairPromptArgs),
    /// Metrics, statistics and report tables.
    Eval {
        #[command(subcommand)]
        command: EvalCommand,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    JsonlHumaneval,
    JsonlGeneric,
    CsvPrompts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LanguageArg {
    Python,
    Java,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Replay,
    HttpCompletion,
    HttpChat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StructureArg {
    P1,
    P2,
    P3,
}

/// Scoring options shared by every subcommand that computes quality scores.
#[derive(Debug, Clone, Default, Args)]
pub struct ScoringArgs {
    /// Quality scheme as factor=weight pairs, weights summing to 1 [default: smell_free=1.0]
    #[arg(long, value_name = "FACTOR=W,...")]
    pub weights: Option<String>,
    /// JSON file holding a list of external analyzer specs [default: none, built-in rules only]
    #[arg(long, value_name = "FILE")]
    pub analyzers: Option<PathBuf>,
    /// JSON config file; flags given on the command line override it [default: none]
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PipelineArgs {
    /// Prompt dataset file
    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,
    /// Dataset format [default: jsonl-humaneval]
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Language for records that do not name one [default: python]
    #[arg(long, value_enum)]
    pub language: Option<LanguageArg>,
    /// Generation backend [default: replay]
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Model identifier sent to the backend and used in replay keys
    #[arg(long)]
    pub model: Option<String>,
    /// HTTP endpoint URL for http-completion and http-chat [default: none]
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Environment variable holding the bearer token [default: none]
    #[arg(long, value_name = "VAR")]
    pub auth_env: Option<String>,
    /// Replay fixture file (JSON lines) [default: none]
    #[arg(long, value_name = "FILE")]
    pub fixtures: Option<PathBuf>,
    /// Suggestions requested per prompt [default: 10]
    #[arg(long)]
    pub n: Option<usize>,
    /// Maximum new tokens per suggestion [default: 128 for completion/replay backends, 512 for chat]
    #[arg(long)]
    pub max_tokens: Option<u32>,
    /// Repair threshold: repair when the top score is below it [default: 1.0]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Repair prompt structure [default: p1]
    #[arg(long, value_enum)]
    pub repair_structure: Option<StructureArg>,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Manual relevance labels, {prompt_id: {position: 2|3}} [default: none, clean snippets count as 3]
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    /// Report destination [default: stdout]
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Directory to also write compilability.csv, ndcg.csv and timing.csv into [default: none]
    #[arg(long, value_name = "DIR")]
    pub tables: Option<PathBuf>,
    /// Worker threads; 0 picks one per core [default: 0]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Record per-phase wall-clock timings (makes reports non-reproducible) [default: off]
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FilterArgs {
    /// Language the inventory must be in [default: the inventory's own]
    #[arg(long, value_enum)]
    pub language: Option<LanguageArg>,
    /// Read input from a file instead of stdin [default: stdin]
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Read input from a file instead of stdin [default: stdin]
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RepairPromptArgs {
    /// Repair prompt structure [default: p1]
    #[arg(long, value_enum)]
    pub structure: Option<StructureArg>,
    /// Repair threshold [default: 1.0]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Print the RepairPrompt as JSON instead of its text [default: off]
    #[arg(long)]
    pub json: bool,
    /// Read input from a file instead of stdin [default: stdin]
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// NDCG@k of a relevance vector given as a JSON array on stdin or via --labels.
    Ndcg {
        /// Comma-separated labels in ranked order, each 0..=3 [default: read stdin]
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<u8>>,
    },
    /// Cohen's kappa of {"a": [...], "b": [...]} on stdin.
    Kappa {
        /// Read input from a file instead of stdin [default: stdin]
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
    },
    /// Paired t-test of {"x": [...], "y": [...]} on stdin.
    Ttest {
        /// Read input from a file instead of stdin [default: stdin]
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
    },
    /// CSV tables from one or more pipeline reports (one column per report).
    Tables {
        /// Pipeline report JSON files
        #[arg(required = true, value_name = "REPORT")]
        reports: Vec<PathBuf>,
        /// Which table to print [default: all]
        #[arg(long, value_enum, default_value_t = TableKind::All, hide_default_value = true)]
        kind: TableKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableKind {
    Compilability,
    Ndcg,
    Timing,
    All,
}
