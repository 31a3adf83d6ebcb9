//! `emblem`: batch entry points for ingest, keyword labelling, the labelling
//! service, oracle simulation, release-pair evaluation and cost reports.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "emblem", version, about = "Active-learning commit labelling and defect prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest a commit CSV into a corpus file.
    Ingest(IngestArgs),
    /// Label every commit with the keyword rule.
    KeywordLabel(KeywordArgs),
    /// Run the HTTP labelling service.
    Serve(ServeArgs),
    /// Run an active-learning session answered from a truth file.
    Simulate(SimulateArgs),
    /// Compare labelling methods and learners over consecutive release pairs.
    Evaluate(EvaluateArgs),
    /// Report labelling cost.
    Cost(CostArgs),
}

#[derive(Debug, Args)]
pub struct CorpusSource {
    /// Corpus file written by `ingest`, or a commit CSV.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Column mapping (JSON object, logical name to header) when reading a CSV.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Column mapping (JSON object, logical name to header).
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Vocabulary size.
    #[arg(long, default_value_t = emblem_core::corpus::DEFAULT_N1)]
    pub n1: usize,
    /// Stop-word list, one word per line (replaces the built-in list).
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct KeywordArgs {
    #[command(flatten)]
    pub source: CorpusSource,
    /// Rules as a JSON object `{category: [keywords]}`.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Categories counted as bug-fixing (default `Corrective`).
    #[arg(long = "fixing-category")]
    pub fixing_categories: Vec<String>,
    /// Fix-to-inducing links (JSON); output bug-inducing labels instead.
    #[arg(long)]
    pub links: Option<PathBuf>,
    /// Output file (default stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "EMBLEM_ADDR", default_value = emblem_service::DEFAULT_ADDR)]
    pub addr: String,
    #[arg(long, env = "EMBLEM_DATA_DIR", default_value = emblem_service::DEFAULT_DATA_DIR)]
    pub data_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SessionParamArgs {
    #[arg(long, default_value_t = emblem_core::corpus::DEFAULT_N1)]
    pub n1: usize,
    #[arg(long, default_value_t = 1)]
    pub n2: usize,
    #[arg(long, default_value_t = 30)]
    pub n3: usize,
    /// Target recall in (0, 1].
    #[arg(long, default_value_t = 0.95)]
    pub n4: f64,
    #[arg(long, default_value_t = 1)]
    pub retrain_every: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: CorpusSource,
    /// Bug-fixing truth labels (`commit_id,label`).
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub params: SessionParamArgs,
    /// Write the per-label transcript as CSV.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Compare {
    /// One table per learner, ranking the label sets.
    Labels,
    /// One table per label set, ranking the learners.
    Learners,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub source: CorpusSource,
    #[arg(long = "labels-a")]
    pub labels_a: PathBuf,
    #[arg(long = "labels-b")]
    pub labels_b: Option<PathBuf>,
    #[arg(long = "name-a", default_value = "a")]
    pub name_a: String,
    #[arg(long = "name-b", default_value = "b")]
    pub name_b: String,
    /// Treat label files as bug-fixing labels and derive bug-inducing labels
    /// through these links (JSON object fix id to inducing ids).
    #[arg(long)]
    pub links: Option<PathBuf>,
    /// Shared bug-inducing ground truth for scoring (default: each treatment's own labels).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "fft,lr,svm,rf")]
    pub learners: Vec<String>,
    /// `g` (G-score) or `popt20`.
    #[arg(long, default_value = "g")]
    pub goal: String,
    #[arg(long, default_value_t = 20)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rebalance training data with SMOTE.
    #[arg(long)]
    pub smote: bool,
    #[arg(long, value_enum, default_value_t = Compare::Labels)]
    pub compare: Compare,
    /// `conventional` or `paper-literal`.
    #[arg(long, default_value = "conventional")]
    pub far_mode: String,
    #[arg(long, default_value_t = 4)]
    pub fft_depth: usize,
    #[arg(long, default_value_t = 100)]
    pub n_trees: usize,
    /// Write the win tables as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CostMethod {
    Manual,
    Emblem,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[arg(long, value_enum, default_value_t = CostMethod::Manual)]
    pub method: CostMethod,
    #[arg(long)]
    pub projects: Option<u64>,
    #[arg(long)]
    pub seconds_per_commit: Option<f64>,
    #[arg(long)]
    pub commits: Option<u64>,
    #[arg(long)]
    pub wage: Option<f64>,
    #[arg(long)]
    pub readers: Option<u32>,
    #[arg(long)]
    pub cull: Option<f64>,
    #[arg(long)]
    pub overhead: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::KeywordLabel(a) => commands::keyword_label(a),
        Command::Serve(a) => commands::serve(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Cost(a) => commands::cost(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
