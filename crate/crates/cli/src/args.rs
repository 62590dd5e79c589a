use std::fmt::Display;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use dlp_eval_core::{EmptyPolicy, GraphKind, NegativeStrategy, Period, Schema};
use serde::{Serialize, Serializer};

#[derive(Parser, Debug)]
#[command(
    name = "dlp-eval",
    version,
    about = "Dynamic link prediction evaluation on temporal graphs"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Partition counts and Surprise index at the test cutoff.
    Stats(StatsArgs),
    /// Write the train and test event files.
    Split(StatsArgs),
    /// Birth-Death diagrams for nodes and edges.
    Bd(BdArgs),
    /// Surprise index over a range of test ratios.
    Sweep(SweepArgs),
    /// Draw negatives for test events.
    Sample(SampleArgs),
    /// Score a stream with a baseline, or summarize external score logs.
    Eval(EvalArgs),
    /// AUC and MAR tables from score logs.
    Metrics(MetricsArgs),
    /// MAR-over-time plot from a score log.
    Plot(PlotArgs),
}

fn display<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn display_list<T: Display, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(ToString::to_string))
}

#[derive(Args, Debug, Serialize)]
pub struct InputOpts {
    /// Column layout of the event file.
    #[arg(long, default_value = "minimal")]
    #[serde(serialize_with = "display")]
    pub schema: Schema,

    #[arg(long, default_value = "directed")]
    #[serde(serialize_with = "display")]
    pub kind: GraphKind,

    #[arg(long)]
    pub allow_self_loops: bool,

    /// Name used in reports; defaults to the input file stem.
    #[arg(long)]
    pub dataset: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct SplitOpts {
    /// Share of events (by count) placed in the test period.
    #[arg(long, default_value_t = 0.15)]
    pub test_ratio: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct OutOpts {
    #[arg(long, env = "DLP_EVAL_OUT_DIR", default_value = "dlp-eval-out")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OnEmpty {
    Skip,
    Abort,
}

impl From<OnEmpty> for EmptyPolicy {
    fn from(v: OnEmpty) -> Self {
        match v {
            OnEmpty::Skip => EmptyPolicy::Skip,
            OnEmpty::Abort => EmptyPolicy::Abort,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct SamplingOpts {
    /// Comma-separated codes: HS,OS,IS,HD,OD,ID,HE,OE,IE,RND.
    #[arg(long, value_delimiter = ',', default_value = "HE,OE,IE")]
    #[serde(serialize_with = "display_list")]
    pub strategies: Vec<NegativeStrategy>,

    /// Negatives per strategy per positive.
    #[arg(long, default_value_t = 1)]
    pub k: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Policy when a strategy has no legal candidate for an event.
    #[arg(long, value_enum, default_value = "skip")]
    pub on_empty: OnEmpty,
}

#[derive(Args, Debug, Serialize)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub opts: InputOpts,
    #[command(flatten)]
    pub split: SplitOpts,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Args, Debug, Serialize)]
pub struct BdArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub opts: InputOpts,
    #[command(flatten)]
    pub split: SplitOpts,
    #[command(flatten)]
    pub out: OutOpts,

    /// Downsample drawn points above this count; CSVs always hold every key.
    #[arg(long, default_value_t = 100_000)]
    pub max_points: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    /// One or more event files; each becomes a curve.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    #[command(flatten)]
    pub opts: InputOpts,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5"
    )]
    pub ratios: Vec<f64>,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Args, Debug, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub opts: InputOpts,
    #[command(flatten)]
    pub split: SplitOpts,
    #[command(flatten)]
    pub sampling: SamplingOpts,
    /// Also sample for train events.
    #[arg(long)]
    pub include_train: bool,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerChoice {
    Pa,
    Edgebank,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodChoice {
    Train,
    Test,
    All,
}

impl From<PeriodChoice> for Period {
    fn from(v: PeriodChoice) -> Self {
        match v {
            PeriodChoice::Train => Period::Train,
            PeriodChoice::Test => Period::Test,
            PeriodChoice::All => Period::All,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    /// Event file to score with a baseline.
    #[arg(long, required_unless_present = "score_log")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub opts: InputOpts,
    #[command(flatten)]
    pub split: SplitOpts,
    #[command(flatten)]
    pub sampling: SamplingOpts,

    #[arg(long, default_value_t = dlp_eval_core::scorers::DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,

    #[arg(long, value_enum, default_value = "edgebank", conflicts_with = "score_log")]
    pub scorer: ScorerChoice,

    /// Externally produced score logs (e.g. one per model seed).
    #[arg(long, conflicts_with = "input")]
    pub score_log: Vec<PathBuf>,

    /// Period over which batch AUCs are averaged.
    #[arg(long, value_enum, default_value = "test")]
    pub period: PeriodChoice,

    #[arg(long, default_value_t = dlp_eval_core::metrics::DEFAULT_BINS)]
    pub bins: usize,

    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Args, Debug, Serialize)]
pub struct MetricsArgs {
    #[arg(long, required = true)]
    pub score_log: Vec<PathBuf>,

    #[arg(long, value_enum, default_value = "test")]
    pub period: PeriodChoice,

    #[arg(long, default_value_t = dlp_eval_core::metrics::DEFAULT_BINS)]
    pub bins: usize,

    /// Also write confusion matrices at this score threshold.
    #[arg(long)]
    pub threshold: Option<f64>,

    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Args, Debug, Serialize)]
pub struct PlotArgs {
    #[arg(long)]
    pub score_log: PathBuf,

    #[arg(long, default_value_t = dlp_eval_core::metrics::DEFAULT_BINS)]
    pub bins: usize,

    #[arg(long)]
    pub title: Option<String>,

    #[command(flatten)]
    pub out: OutOpts,
}
