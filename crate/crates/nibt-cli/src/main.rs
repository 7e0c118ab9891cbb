//! `nibt`: sample models, reduce sample sets and compare against the
//! intrusive reference from the command line.

// Negated comparisons such as `!(x > 0.0)` are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exit code for invalid input or configuration.
const EXIT_INPUT: u8 = 2;
/// Exit code for a failed numerical kernel.
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "nibt", version, about = "Balanced truncation from transfer-function samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a state-space model at conjugate-paired points.
    Sample(SampleArgs),
    /// Reduce a sample set and write the ROM plus its Hankel-like values.
    Reduce(ReduceArgs),
    /// Tabulate intrusive and non-intrusive errors over a range of orders.
    Compare(CompareArgs),
    /// Write a random stable model (or the built-in 8th-order example).
    Synth(SynthArgs),
    /// Write Hankel(-like) values of a sample set or a model.
    Hsv(HsvArgs),
}

/// Frequency grids: `log:start:stop:count` or a file with one frequency per line.
#[derive(Args, Debug, Clone)]
struct GridArgs {
    /// Right (input-side) frequencies.
    #[arg(long)]
    right: String,
    /// Left (output-side) frequencies.
    #[arg(long)]
    left: String,
    /// Real part of every point (`offset ± jω`); positive for ADI, 0 for DDP.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    offset: f64,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// State-space model file.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    /// Output sample file.
    #[arg(long, default_value = "samples.json")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct MethodArgs {
    /// Balanced truncation variant: bt, lqg, hinf, pr, br, sw or bst.
    #[arg(long, default_value = "bt")]
    variant: String,
    /// Gramian approximation: adi (right-half-plane points) or ddp (imaginary-axis points).
    #[arg(long, default_value = "adi")]
    mode: String,
    /// Pole damping of the DDP interpolants.
    #[arg(long, conflicts_with = "eps_auto")]
    eps: Option<f64>,
    /// Choose epsilon from the named admissibility bound
    /// (modal-a, qv-dom, tv-dom, xp-dom, gramian, a-hat-rows, tv-ddp).
    #[arg(long)]
    eps_auto: Option<String>,
    /// Tolerance handed to the automatic epsilon bounds.
    #[arg(long, default_value_t = 1e-2)]
    eps_delta: f64,
    /// Robustness parameter of the hinf variant.
    #[arg(long, default_value_t = nibt_core::variants::DEFAULT_GAMMA)]
    gamma: f64,
    /// Use the block-diagonal closed forms instead of the full solves.
    #[arg(long)]
    fast_path: bool,
    /// JSON file with the free parameters (`{"right": ..., "left": ...}`).
    #[arg(long)]
    zeta_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    /// Sample file.
    #[arg(long)]
    samples: PathBuf,
    #[command(flatten)]
    method: MethodArgs,
    /// Reduced order.
    #[arg(long)]
    order: usize,
    /// Output ROM file.
    #[arg(long, default_value = "rom.json")]
    out: PathBuf,
    /// Output CSV of Hankel-like values (defaults to hsv.csv next to the ROM).
    #[arg(long)]
    hsv_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// State-space model file (the intrusive reference).
    #[arg(long)]
    model: PathBuf,
    /// Sample file; when absent the model is sampled on `--right/--left`.
    #[arg(long, conflicts_with_all = ["right", "left"])]
    samples: Option<PathBuf>,
    /// Right frequencies when sampling the model.
    #[arg(long, requires = "left")]
    right: Option<String>,
    /// Left frequencies when sampling the model.
    #[arg(long, requires = "right")]
    left: Option<String>,
    /// Real part of the sampled points.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    offset: f64,
    #[command(flatten)]
    method: MethodArgs,
    /// Comma-separated variants or `all`; overrides `--variant`.
    #[arg(long)]
    variants: Option<String>,
    /// Largest order to tabulate.
    #[arg(long, default_value_t = 10)]
    max_order: usize,
    /// Output CSV (the run configuration goes to `<out>.config.json`).
    #[arg(long, default_value = "compare.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// State dimension.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Number of inputs.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Number of outputs.
    #[arg(long, default_value_t = 1)]
    p: usize,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Strictly positive real, bounded real and minimum phase (needs m = p).
    #[arg(long)]
    passive: bool,
    /// Write the built-in 8th-order example instead of a random model.
    #[arg(long, conflicts_with_all = ["n", "m", "p", "seed", "passive"])]
    example: bool,
    /// With `--example`, also write its free parameter file here.
    #[arg(long, requires = "example")]
    zeta_out: Option<PathBuf>,
    /// Output model file.
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct HsvArgs {
    /// Sample file (non-intrusive values).
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    samples: Option<PathBuf>,
    /// Model file (intrusive values).
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    method: MethodArgs,
    /// Output CSV.
    #[arg(long, default_value = "hsv.csv")]
    out: PathBuf,
}

fn configure_threads() -> anyhow::Result<Option<usize>> {
    let Ok(raw) = std::env::var("MOR_NUM_THREADS") else {
        return Ok(None);
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| inputs::InputError(format!("MOR_NUM_THREADS must be a positive integer, got \"{raw}\"")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(Some(threads))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|e| e.downcast_ref::<nibt_core::Error>().is_some_and(|e| e.is_numerical()));
    if numerical {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|threads| match cli.command {
        Command::Sample(args) => commands::sample(&args, threads),
        Command::Reduce(args) => commands::reduce(&args, threads),
        Command::Compare(args) => commands::compare(&args, threads),
        Command::Synth(args) => commands::synth(&args, threads),
        Command::Hsv(args) => commands::hsv(&args, threads),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
