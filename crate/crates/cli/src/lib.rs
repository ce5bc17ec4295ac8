//! Command-line driver for `lambda-soliton`: runs simulations and parameter
//! studies and writes CSV tables, SVG plots, and `.meta` sidecars.
//!
//! [`run_cli`] is the whole program; `main` only forwards its exit code.

pub mod commands;
pub mod output;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lambda_soliton::field::{DEFAULT_DT, DEFAULT_N_POINTS, DEFAULT_N_STEPS, DEFAULT_SNAPSHOT_STRIDE};
use lambda_soliton::Error as CoreError;

pub use output::{write_csv, Cell, Table};
pub use svg::{render_svg_lineplot, LinePlot, Marker, Series};

/// Environment variable capping the worker threads of sweeps.
pub const THREADS_ENV: &str = "LAMBDA_SOLITON_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "lambda-soliton", version, about = "Simulate λ-schemes with imaginary diffusion and measure their solitons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write every snapshot to trajectory.csv.
    Simulate(SimulateArgs),
    /// Soliton speed against λ for several C; writes velocity.csv and velocity.svg.
    SweepVelocity(SweepArgs),
    /// Bisect the smallest initial gradient that forms a soliton; writes threshold.csv.
    Threshold(ThresholdArgs),
    /// Height of the dominant soliton over time; writes heights.csv and heights.svg.
    HeightTrace(HeightArgs),
    /// Divergence between the λ-scheme and the fractional stepper; writes gl_compare.csv.
    GlCompare(GlArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Grid nodes, boundaries included.
    #[arg(long, default_value_t = DEFAULT_N_POINTS)]
    pub n: usize,
    /// Domain length L.
    #[arg(long, default_value_t = 1.0)]
    pub length: f64,
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = DEFAULT_N_STEPS)]
    pub steps: usize,
    /// Keep every k-th time level.
    #[arg(long, default_value_t = DEFAULT_SNAPSHOT_STRIDE)]
    pub stride: usize,
    /// Directory for the output files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IcKind {
    Uniform,
    Ramp,
}

#[derive(Debug, Clone, Args)]
pub struct IcArgs {
    #[arg(long, value_enum, default_value_t = IcKind::Uniform)]
    pub ic: IcKind,
    /// Plateau level of the initial field.
    #[arg(long, default_value_t = 1.0)]
    pub level: f64,
    /// Edge-ramp slope (ramp initial condition only).
    #[arg(long, default_value_t = 1e-3)]
    pub gradient: f64,
    /// Edge-ramp width as a fraction of the domain.
    #[arg(long, default_value_t = 0.1)]
    pub ramp_width: f64,
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    /// Snapshots a track must span to count as formed.
    #[arg(long, default_value_t = 20)]
    pub min_lifetime: usize,
    /// Peak prominence floor as a fraction of the snapshot maximum.
    #[arg(long, default_value_t = 0.05)]
    pub prominence: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c_real: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub c_imag: f64,
    #[command(flatten)]
    pub ic: IcArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Comma-separated λ values, strictly ascending inside (0, 2).
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0,1.1,1.2,1.3,1.4,1.5,1.6,1.7,1.8,1.9")]
    pub lambdas: Vec<f64>,
    /// Real part shared by every C.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c_real: f64,
    /// Comma-separated imaginary parts, one series per value.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1.0,1.5", allow_negative_numbers = true)]
    pub c_imag: Vec<f64>,
    #[command(flatten)]
    pub ic: IcArgs,
    #[command(flatten)]
    pub detect: DetectArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThresholdMode {
    /// Unit plateau with edge ramps of slope ε.
    Ramp,
    /// Plateau at level ε.
    Jump,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c_real: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub c_imag: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub eps_lo: f64,
    #[arg(long, default_value_t = 1e-1)]
    pub eps_hi: f64,
    /// Stop when the bracket is narrower than this.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = ThresholdMode::Ramp)]
    pub mode: ThresholdMode,
    #[arg(long, default_value_t = 0.1)]
    pub ramp_width: f64,
    #[command(flatten)]
    pub detect: DetectArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct HeightArgs {
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c_real: f64,
    /// Comma-separated imaginary parts, one trace per value.
    #[arg(long, value_delimiter = ',', default_value = "2.8,1.5,0.5", allow_negative_numbers = true)]
    pub c_imag: Vec<f64>,
    #[command(flatten)]
    pub ic: IcArgs,
    #[command(flatten)]
    pub detect: DetectArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GlArgs {
    /// λ of the reference scheme.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c_real: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub c_imag: f64,
    /// Comma-separated fractional orders in (0, 1].
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.7,0.9")]
    pub gamma: Vec<f64>,
    /// Real part of K_γ; defaults to the real part of C.
    #[arg(long, allow_negative_numbers = true)]
    pub k_real: Option<f64>,
    /// Imaginary part of K_γ; defaults to the imaginary part of C.
    #[arg(long, allow_negative_numbers = true)]
    pub k_imag: Option<f64>,
    /// Memory length in steps; 0 keeps the full history.
    #[arg(long, default_value_t = 0)]
    pub memory: usize,
    #[command(flatten)]
    pub ic: IcArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Output(#[from] output::OutputError),
    #[error(transparent)]
    Plot(#[from] svg::PlotError),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Output(_) | CliError::Plot(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                CoreError::InvalidConfig(_)
                | CoreError::InvalidRamp(_)
                | CoreError::SamplesLengthMismatch { .. }
                | CoreError::GridMismatch(_) => EXIT_USAGE,
                _ => EXIT_NUMERIC,
            },
        }
    }
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be an integer >= 1, got {v:?}"))),
        },
        Err(e) => Err(CliError::Usage(format!("{THREADS_ENV}: {e}"))),
    }
}

/// Parse `argv` (program name first), run the subcommand, and return the
/// process exit code. Messages go to stderr.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = thread_cap().and_then(|cap| match cap {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))?
            .install(|| commands::dispatch(&cli.command)),
        None => commands::dispatch(&cli.command),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
