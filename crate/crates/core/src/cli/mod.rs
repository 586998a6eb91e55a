//! Command-line front end. Every command is a thin shell over library calls;
//! this module only parses flags, formats output and maps errors to exit codes.
//!
//! Exit codes: 0 success, 1 I/O, 2 usage or parse error, 3 regression or
//! model-consistency failure.

mod commands;
pub mod csvio;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_compare, cmd_invert, cmd_nf, cmd_oracle, cmd_sweep};

pub const DEFAULT_ETA: f64 = 0.85;

#[derive(Debug, Parser)]
#[command(name = "twinbeam", version, about = "Relative-intensity squeezing of four-wave-mixing twin beams with loss")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the noise figure for one parameter set
    Nf(NfArgs),
    /// Noise-figure grid over probe transmission and intrinsic gain
    Sweep(SweepArgs),
    /// Forward vs reverse configuration at fixed gain
    Compare(CompareArgs),
    /// Convergence of the discrete gain/loss chain to the continuum model
    Oracle(OracleArgs),
    /// Infer intrinsic gain and probe transmission from measured gains
    Invert(InvertArgs),
}

/// Squeezing given either directly or as intrinsic gain `G = cosh²S`.
#[derive(Debug, Clone, Args)]
pub struct Squeezing {
    /// Intrinsic gain G = cosh²(S)
    #[arg(long, conflicts_with = "s")]
    pub gain: Option<f64>,
    /// Squeezing parameter S
    #[arg(long)]
    pub s: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct NfArgs {
    #[command(flatten)]
    pub squeezing: Squeezing,
    /// Probe transmission of the medium
    #[arg(long, default_value_t = 1.0)]
    pub ta: f64,
    /// Conjugate transmission of the medium
    #[arg(long, default_value_t = 1.0)]
    pub tb: f64,
    /// Balanced detection efficiency
    #[arg(long, env = "TWINBEAM_ETA", default_value_t = DEFAULT_ETA)]
    pub eta: f64,
    /// Probe detection efficiency (overrides --eta)
    #[arg(long)]
    pub eta_a: Option<f64>,
    /// Conjugate detection efficiency (overrides --eta)
    #[arg(long)]
    pub eta_b: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Probe transmission range: min,max,count
    #[arg(long, value_delimiter = ',', default_value = "0.01,1,100")]
    pub ta_range: Vec<f64>,
    /// Intrinsic gain range: min,max,count
    #[arg(long, value_delimiter = ',', default_value = "1,6,51")]
    pub gain_range: Vec<f64>,
    #[arg(long, env = "TWINBEAM_ETA", default_value_t = DEFAULT_ETA)]
    pub eta: f64,
    /// Grid CSV (`ta,gain,nf_db`)
    #[arg(long)]
    pub out: PathBuf,
    /// Optimal-transmission CSV (`gain,ta_star,nf_star_db`); defaults to
    /// `<out stem>_optimal.csv` next to the grid file
    #[arg(long)]
    pub optimal_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long, default_value_t = 3.0)]
    pub gain: f64,
    #[arg(long, env = "TWINBEAM_ETA", default_value_t = DEFAULT_ETA)]
    pub eta: f64,
    /// Transmission range: min,max,count
    #[arg(long, value_delimiter = ',', default_value = "0.3,1,100")]
    pub t_range: Vec<f64>,
    /// Output CSV; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub squeezing: Squeezing,
    #[arg(long, default_value_t = 0.7)]
    pub ta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tb: f64,
    #[arg(long, env = "TWINBEAM_ETA", default_value_t = DEFAULT_ETA)]
    pub eta: f64,
    /// Ascending list of stage counts
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1000,2000,4000,8000,16000,32000,64000,128000"
    )]
    pub stages: Vec<u64>,
    /// Largest tolerated |nf_N − nf_continuum| in the final row
    #[arg(long, default_value_t = 1e-4)]
    pub threshold: f64,
    #[arg(long, default_value_t = crate::chain::DEFAULT_MAX_STAGES)]
    pub max_stages: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct InvertArgs {
    /// Measurement CSV with header `detuning_mhz,gain_probe,gain_conjugate[,nf_db]`
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = "TWINBEAM_ETA", default_value_t = DEFAULT_ETA)]
    pub eta: f64,
    /// Assumed conjugate transmission
    #[arg(long, default_value_t = 1.0)]
    pub tb: f64,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn io(context: impl std::fmt::Display, e: std::io::Error) -> Self {
        Self { code: 1, message: format!("{context}: {e}") }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn regression(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Nf(a) => cmd_nf(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Compare(a) => cmd_compare(&a, out),
        Command::Oracle(a) => cmd_oracle(&a, out),
        Command::Invert(a) => cmd_invert(&a, out, err),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{text}");
            return code;
        }
    };
    match run(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}
