//! Command-line front end: configuration, artifact writing and the six
//! subcommands. The `tweezer` binary is a thin wrapper around [`main`].

pub mod artifact;
pub mod config;
pub mod svg;

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

use crate::collision::CollisionError;
use crate::gate::GateError;
use crate::hologram::HologramError;
use crate::imaging::ImagingError;
use crate::loading::LoadingError;
pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "tweezer", version, about = "Tweezer-array loading, holography, imaging and gate simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Restrict report artifacts to one format; binary data is always written.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Progress messages on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Inelastic-collision probability over intensity and detuning.
    PicSweep,
    /// Monte Carlo loading efficiency, array-size sweep and MOT profile.
    LoadSim,
    /// Weighted Gerchberg–Saxton phase mask for a spot array.
    Holo,
    /// Synthetic fluorescence image sequence with ground truth.
    ImgSim,
    /// Occupancy classification and triple-image fidelity of a sequence.
    ImgAnalyze(ImgAnalyzeArgs),
    /// Time-optimal CZ pulse optimization.
    GateOpt,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PicSweep => "pic-sweep",
            Self::LoadSim => "load-sim",
            Self::Holo => "holo",
            Self::ImgSim => "img-sim",
            Self::ImgAnalyze(_) => "img-analyze",
            Self::GateOpt => "gate-opt",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ImgAnalyzeArgs {
    /// Directory written by img-sim (default: config `img_analyze.input`, then --out).
    #[arg(long, value_name = "DIR")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub sigma_sharp: Option<f64>,
    #[arg(long)]
    pub sigma_wide1: Option<f64>,
    #[arg(long)]
    pub sigma_wide2: Option<f64>,
    /// Camera bias subtracted before filtering.
    #[arg(long)]
    pub bias: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AppError {
    /// Bad configuration, arguments or input files.
    Config(String),
    /// A computation failed to converge or produced no usable result.
    Numerical(String),
    /// Output could not be written.
    Io(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for AppError {}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<CollisionError> for AppError {
    fn from(e: CollisionError) -> Self {
        match e {
            CollisionError::UnbracketedCrossing { .. } => Self::Numerical(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<LoadingError> for AppError {
    fn from(e: LoadingError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<HologramError> for AppError {
    fn from(e: HologramError) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<ImagingError> for AppError {
    fn from(e: ImagingError) -> Self {
        match e {
            ImagingError::InvalidParameter { .. } | ImagingError::RoiOutOfBounds { .. } | ImagingError::Decode(_) => {
                Self::Config(e.to_string())
            }
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<GateError> for AppError {
    fn from(e: GateError) -> Self {
        match e {
            GateError::InvalidParameter { .. } => Self::Config(e.to_string()),
            GateError::NotConverged { .. } => Self::Numerical(e.to_string()),
        }
    }
}

/// Reads and parses a config file; parse errors carry line and column.
pub fn load_config(path: &Path) -> Result<(RunConfig, String), AppError> {
    let source = std::fs::read_to_string(path)
        .map_err(|e| AppError::Config(format!("cannot read {}: {e}", path.display())))?;
    let config = RunConfig::parse(&source).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    Ok((config, source))
}

/// Runs one parsed command line and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, AppError> {
    let (mut config, source) = match &cli.common.config {
        Some(path) => {
            let (c, s) = load_config(path)?;
            (c, Some((path.display().to_string(), s)))
        }
        None => (RunConfig::default(), None),
    };
    let seed = cli.common.seed.unwrap_or(config.seed);
    config.apply_seed(seed);
    let issue = match &cli.command {
        Command::PicSweep => config.validate_pic_sweep(),
        Command::LoadSim => config.validate_load_sim(),
        Command::Holo => config.validate_holo(),
        Command::ImgSim | Command::ImgAnalyze(_) => config.validate_img(),
        Command::GateOpt => config.validate_gate(),
    };
    if let Err(issue) = issue {
        let (file, text) = match &source {
            Some((f, s)) => (f.as_str(), Some(s.as_str())),
            None => ("<defaults>", None),
        };
        return Err(AppError::Config(issue.render(file, text)));
    }
    let work = || commands::dispatch(&cli.command, &config, &cli.common);
    match cli.common.threads {
        None => work(),
        Some(0) => Err(AppError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| AppError::Config(format!("thread pool: {e}")))?
            .install(work),
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("tweezer {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
