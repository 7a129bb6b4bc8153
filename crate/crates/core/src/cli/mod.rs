//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure, 2 I/O or parse error
//! (including bad arguments).

mod commands;
mod io;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::PathBuf;

use clap::builder::TypedValueParser as _;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::DatasetError;
use crate::lesion::ExtractError;
use crate::metrics::MetricsError;
use crate::synth::SynthError;
use crate::volume::ParseError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hepacrop", version, about = "Lesion crop extraction, dataset building and scoring for liver CT")]
pub struct Cli {
    /// Worker threads for per-patient work; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Print what would be done without writing anything.
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort and print its study lines.
    Synth(SynthArgs),
    /// Extract lesion crops and write one manifest per resolution.
    Preprocess(PreprocessArgs),
    /// Write one patient-level train/test split per seed.
    Split(SplitArgs),
    /// Write a class-balanced training manifest for one split.
    Balance(BalanceArgs),
    /// Score prediction files against splits.
    Score(ScoreArgs),
    /// Class distribution and label correlation of a manifest.
    Stats(StatsArgs),
    /// Check study inclusion rules on a manifest.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VolumeFormat {
    Nifti,
    NiftiGz,
    Dicom,
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    /// Comma-separated seeds. Defaults to HEPACROP_SEED, then 17,42,1337,2022,31337.
    #[arg(long, env = "HEPACROP_SEED", value_delimiter = ',')]
    pub seeds: Vec<u64>,
}

impl SeedArgs {
    pub fn resolve(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            crate::DEFAULT_SEEDS.to_vec()
        } else {
            self.seeds.clone()
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value = "synth")]
    pub out: PathBuf,
    /// Defaults to the first entry of HEPACROP_SEED, then 17.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 20)]
    pub patients: usize,
    #[arg(long, default_value_t = 1)]
    pub min_lesions: usize,
    #[arg(long, default_value_t = 3)]
    pub max_lesions: usize,
    #[arg(long, value_enum, default_value_t = VolumeFormat::Nifti)]
    pub format: VolumeFormat,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Study JSONL; `-` reads standard input.
    #[arg(long, default_value = "-")]
    pub study: String,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.4)]
    pub eps: f64,
    #[arg(long, default_value_t = 10.0)]
    pub border_mm: f64,
    /// Comma-separated output resolutions.
    #[arg(long, value_delimiter = ',', default_value = "128")]
    pub res: Vec<usize>,
    #[arg(long, default_value_t = 40.0, allow_negative_numbers = true)]
    pub window_center: f64,
    #[arg(long, default_value_t = 400.0)]
    pub window_width: f64,
    /// Average slice areas before opening.
    #[arg(long)]
    pub mean_pre_opening: bool,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub seeds: SeedArgs,
    #[arg(long, default_value_t = crate::dataset::DEFAULT_TRAIN_FRACTION)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = crate::dataset::DEFAULT_CANDIDATES)]
    pub candidates: usize,
    #[arg(long, default_value = "splits")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BalanceArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    /// Defaults to the split's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// One manifest, or one per `--pred` file in the same order.
    #[arg(long, required = true)]
    pub manifest: Vec<PathBuf>,
    #[arg(long, required = true, num_args = 1..)]
    pub split: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub pred: Vec<PathBuf>,
    /// Class grouping, 5 or 3.
    #[arg(long, default_value_t = 5, value_parser = clap::builder::PossibleValuesParser::new(["3", "5"]).map(|s| s.parse::<u8>().unwrap()))]
    pub group: u8,
    /// Write the full report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write the text table here.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Io(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io(_) | DatasetError::Json { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Dataset(d) => d.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<ExtractError> for CliError {
    fn from(e: ExtractError) -> Self {
        match e {
            ExtractError::Png(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn init_logging() {
    let env = env_logger::Env::default().default_filter_or("info");
    let _ = env_logger::Builder::from_env(env)
        .format(|buf, record| writeln!(buf, "{} {}", record.level().as_str().to_lowercase(), record.args()))
        .target(env_logger::Target::Stderr)
        .try_init();
}

/// Parse `args` (program name first), run the subcommand and return the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout())
}

/// [`run`] with standard output redirected to `out`.
pub fn run_with<I, T>(args: I, out: &mut (dyn std::io::Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_IO } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            log::error!("event=thread_pool_failed message=\"{e}\"");
            return EXIT_IO;
        }
    };
    let result = pool.install(|| commands::dispatch(&cli, out));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            log::error!("event=failed exit={} message=\"{}\"", e.exit_code(), e.message().replace('"', "'"));
            e.exit_code()
        }
    }
}
