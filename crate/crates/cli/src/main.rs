//! `polaron`: codecs, verification suites, MAC runs, quantization and
//! inference/training simulation from the command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration
//! error.

mod fmt_cmd;
mod mac_cmd;
mod model_cmds;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polaron_core::mac::Accumulation;

#[derive(Parser, Debug)]
#[command(name = "polaron", version, about = "Trans-precision MAC emulator and layer-adaptive quantization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encode, decode and unpack a single value, or dump a conformance table.
    Fmt(FmtArgs),
    /// Run oracle-equivalence suites.
    Verify(VerifyArgs),
    /// Run packed vector operations from a CSV file.
    Mac(MacArgs),
    /// Compute layer sensitivities and write a precision plan.
    Quantize(QuantizeArgs),
    /// Run inference (or training with --train) under a plan.
    Run(RunArgs),
    /// Generate the synthetic 14x14 digit dataset.
    Digits(DigitsArgs),
    /// Write a freshly initialized fully connected model.
    InitMlp(InitMlpArgs),
}

#[derive(Args, Debug)]
pub struct FmtArgs {
    /// Format name, e.g. posit8, fp8e4m3, fxp8:f4.
    #[arg(long)]
    pub format: String,
    /// Bit pattern to decode (hex with optional 0x, or decimal).
    #[arg(long, conflicts_with_all = ["value", "table"])]
    pub bits: Option<String>,
    /// Real value to encode.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "table")]
    pub value: Option<String>,
    /// Round toward +inf instead of to nearest-even.
    #[arg(long)]
    pub toward_positive: bool,
    /// Dump `bits_hex,value_decimal,flags` for every pattern (formats up to 8 bits).
    #[arg(long)]
    pub table: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    CodecRoundtrip,
    DotExact,
    Throughput,
    Multiplier,
    OracleEncode,
    All,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Randomized cases per randomized suite.
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AccumulationArg {
    Exact,
    AlignToMax,
}

impl From<AccumulationArg> for Accumulation {
    fn from(a: AccumulationArg) -> Self {
        match a {
            AccumulationArg::Exact => Accumulation::ExactWide,
            AccumulationArg::AlignToMax => Accumulation::AlignToMax,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct DatapathArgs {
    /// Disable zero-skipping.
    #[arg(long)]
    pub no_zero_skip: bool,
    #[arg(long, value_enum, default_value = "exact")]
    pub accumulation: AccumulationArg,
}

#[derive(Args, Debug)]
pub struct MacArgs {
    /// CSV file: `mode,a_hex,b_hex[,expect_hex]` per line.
    pub vectors: PathBuf,
    #[command(flatten)]
    pub datapath: DatapathArgs,
    /// Format the results are rounded into (default: each row's mode).
    #[arg(long)]
    pub output_format: Option<String>,
    /// Stall cycles charged per precision-mode switch.
    #[arg(long, default_value_t = 0)]
    pub mode_switch_penalty: u64,
    /// Print the per-stage pipeline trace.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Args, Debug)]
pub struct QuantizeArgs {
    /// Model directory (manifest plus tensor files).
    #[arg(long)]
    pub model: PathBuf,
    /// Calibration images (`PLRN`, first dimension = samples).
    #[arg(long)]
    pub calib: Option<PathBuf>,
    /// Calibration labels (`PLRN` vector of class indices).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Use at most this many calibration samples.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Output plan file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30.0)]
    pub p_low: f64,
    #[arg(long, default_value_t = 85.0)]
    pub p_high: f64,
    /// Allow the first and last layers below 8 bits.
    #[arg(long)]
    pub no_floor_ends: bool,
    /// Symmetric [-1, 1] thresholds instead of percentiles.
    #[arg(long)]
    pub compat_symmetric: bool,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Precision plan (required unless --float).
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Input tensor: one sample, or a batch with samples along the first dimension.
    #[arg(long)]
    pub input: PathBuf,
    /// Labels for --train, or to report accuracy.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Output tensor file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Stats file (TOML).
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Train instead of only running inference.
    #[arg(long)]
    pub train: bool,
    /// Exact 64-bit network without quantization (baseline).
    #[arg(long)]
    pub float: bool,
    #[arg(long, default_value_t = 1)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lr_decay: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write the trained model.
    #[arg(long)]
    pub save_model: Option<PathBuf>,
    /// Where to write the trained plan (learned clips, refitted quantizers).
    #[arg(long)]
    pub save_plan: Option<PathBuf>,
    #[command(flatten)]
    pub datapath: DatapathArgs,
}

#[derive(Args, Debug)]
pub struct DigitsArgs {
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
}

#[derive(Args, Debug)]
pub struct InitMlpArgs {
    /// Layer sizes, e.g. 196,64,32,32,10.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Outcome of a subcommand that ran to completion.
pub enum Status {
    Ok,
    VerifyFailed,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("POLARON_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| anyhow::anyhow!("POLARON_THREADS must be a positive integer"))?;
        if n == 0 {
            anyhow::bail!("POLARON_THREADS must be a positive integer");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    configure_threads()?;
    match cli.command {
        Command::Fmt(a) => fmt_cmd::run(&a),
        Command::Verify(a) => verify::run(&a),
        Command::Mac(a) => mac_cmd::run(&a),
        Command::Quantize(a) => model_cmds::quantize(&a),
        Command::Run(a) => model_cmds::run(&a),
        Command::Digits(a) => model_cmds::digits(&a),
        Command::InitMlp(a) => model_cmds::init_mlp(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::VerifyFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
