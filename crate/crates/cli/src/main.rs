mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use mca::ErrorClass;

use crate::config::FileConfig;

/// MCA spatial upsampling and evaluation of HRTF sets.
#[derive(Debug, Parser)]
#[command(name = "mca", version)]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize rigid-sphere HRIRs on a grid.
    SynthSphere(SynthArgs),
    /// List, inspect or export sampling grids.
    #[command(subcommand)]
    Grids(GridsCommand),
    /// Upsample a sparse HRIR container to a dense grid.
    Upsample(UpsampleArgs),
    /// Compare a test container with a reference container.
    Evaluate(EvaluateArgs),
    /// Describe an MCAH or MCAF file.
    Info(InfoArgs),
}

/// Head-model overrides shared by several subcommands.
#[derive(Debug, Clone, Args)]
struct HeadArgs {
    /// Sphere radius in metres.
    #[arg(long, value_name = "M", conflicts_with = "head")]
    radius: Option<f64>,

    /// Head width,height,depth in metres (optimal-radius regression).
    #[arg(long, value_name = "W,H,D", value_delimiter = ',', num_args = 3)]
    head: Option<Vec<f64>>,

    #[arg(long, value_name = "M/S")]
    speed_of_sound: Option<f64>,

    /// Accept radii outside the 5-15 cm sanity window.
    #[arg(long)]
    allow_any_radius: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    head: HeadArgs,

    /// lebedev:N, fliege:P, horizontal:STEP or a grid JSON file [default: lebedev:3].
    #[arg(long)]
    grid: Option<String>,

    /// IR length in samples [default: 512].
    #[arg(long)]
    ir_length: Option<usize>,

    /// Sample rate in Hz [default: 44100].
    #[arg(long)]
    sample_rate: Option<f64>,

    #[arg(long)]
    subject: Option<String>,

    #[arg(short, long, value_name = "FILE")]
    output: PathBuf,
}

#[derive(Debug, Subcommand)]
enum GridsCommand {
    /// Supported Lebedev orders and Fliege sizes.
    List,
    /// Summary of one grid.
    Show {
        spec: String,
    },
    /// Write a grid as JSON.
    Export {
        spec: String,
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
struct UpsampleArgs {
    /// Sparse MCAH container.
    input: PathBuf,

    /// Corrected dense container.
    #[arg(short, long, value_name = "FILE")]
    output: PathBuf,

    /// Sparse SH order [default: nominal order of the input grid].
    #[arg(long, short = 'N')]
    order: Option<usize>,

    /// Target grid [default: fliege:900].
    #[arg(long)]
    target: Option<String>,

    #[command(flatten)]
    head: HeadArgs,

    /// Disable the third-octave fade below the aliasing frequency.
    #[arg(long)]
    no_fade: bool,

    /// Limiter threshold in dB, or `off` [default: off].
    #[arg(long, value_name = "DB|off")]
    limit: Option<String>,

    /// Limiter knee width in dB [default: 0].
    #[arg(long, value_name = "DB")]
    knee: Option<f64>,

    /// zero or minimum [default: minimum].
    #[arg(long)]
    phase: Option<String>,

    /// auto, quadrature or least-squares [default: auto].
    #[arg(long)]
    sh_mode: Option<String>,

    /// direct or sphere-equalized [default: direct].
    #[arg(long)]
    auditory_branch: Option<String>,

    /// Force 0 dB filters (corrected output equals uncorrected).
    #[arg(long)]
    no_correction: bool,

    /// Also write the uncorrected dense set.
    #[arg(long, value_name = "FILE")]
    emit_uncorrected: Option<PathBuf>,

    /// Also write the correction filters (MCAF).
    #[arg(long, value_name = "FILE")]
    emit_filters: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    test: PathBuf,
    reference: PathBuf,

    /// Long-format CSV report.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,

    /// Summary JSON [default: stdout].
    #[arg(long, value_name = "FILE")]
    summary: Option<PathBuf>,

    /// Lower edge of the high-band summaries in Hz [default: 4000].
    #[arg(long)]
    high_band_min_hz: Option<f64>,

    /// Skip ILD / ITD errors.
    #[arg(long)]
    no_binaural: bool,

    /// Elevation tolerance for horizontal JND checks [default: 1e-6].
    #[arg(long, value_name = "DEG")]
    horizontal_tolerance: Option<f64>,
}

#[derive(Debug, Args)]
struct InfoArgs {
    file: PathBuf,
}

/// A user-facing validation failure (exit code 3).
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<mca::Error>() {
            return match e.class() {
                ErrorClass::Io => 2,
                ErrorClass::Validation => 3,
                ErrorClass::Numeric => 4,
            };
        }
        if cause.is::<Invalid>() {
            return 3;
        }
        if cause.is::<std::io::Error>() {
            return 2;
        }
    }
    1
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn install_threads(threads: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| anyhow::anyhow!("thread pool: {e}"))?;
    #[cfg(not(feature = "parallel"))]
    if threads > 1 {
        eprintln!("built without the parallel feature; --threads {threads} ignored");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    install_threads(cli.threads.or(file.threads).unwrap_or(0))?;
    match cli.command {
        Command::SynthSphere(args) => commands::synth_sphere(&args, &file),
        Command::Grids(cmd) => commands::grids(&cmd),
        Command::Upsample(args) => commands::upsample(&args, &file),
        Command::Evaluate(args) => commands::evaluate(&args, &file),
        Command::Info(args) => commands::info(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
