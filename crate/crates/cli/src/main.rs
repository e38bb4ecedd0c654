mod commands;
mod parse;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use smdiff::{RootSpec, Variant};

/// Discrete-time matching filtering differentiator: simulations, roots, gains and certificates.
#[derive(Debug, Parser)]
#[command(name = "smdiff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a preset or a JSON config; writes a CSV trace and JSON metrics.
    Run(RunArgs),
    /// Roots of the homogeneous characteristic polynomial.
    Roots(RootsArgs),
    /// Pole-placement gain for a set of discrete roots.
    Gains(GainsArgs),
    /// Lyapunov certificates over a log grid of frozen |w1|.
    Certify(CertifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Matching,
    StandardEuler,
    FilteringEuler,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Matching => Variant::Matching,
            VariantArg::StandardEuler => Variant::StandardEuler,
            VariantArg::FilteringEuler => Variant::FilteringEuler,
        }
    }
}

/// Where the run parameters come from.
#[derive(Debug, Args)]
#[group(required = false, multiple = false)]
struct Source {
    /// Named preset: sim1 or sim2.
    #[arg(long)]
    preset: Option<String>,
    /// JSON config file.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
struct Overrides {
    /// from-charpoly, repeated:<b> or explicit:<re+imi>,..
    #[arg(long, value_parser = parse::root_spec, allow_hyphen_values = true)]
    roots: Option<RootSpec>,
    /// Sampling period in seconds.
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<f64>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Seed of the Gaussian noise.
    #[arg(long, env = "SMDIFF_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    record_stride: Option<u64>,
    /// Trace CSV path; stdout when absent.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Metrics JSON path.
    #[arg(long)]
    metrics: Option<std::path::PathBuf>,
    /// Fraction of the run used as the tail window.
    #[arg(long)]
    settle_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RootsArgs {
    /// Take lambda and L from a preset.
    #[arg(long)]
    preset: Option<String>,
    /// Gains lambda_0,..,lambda_m.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Option<Vec<f64>>,
    #[arg(long, visible_alias = "L")]
    lipschitz: Option<f64>,
    /// Order m; defaults to the number of gains minus one.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GainsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    nf: usize,
    #[arg(long)]
    tau: f64,
    /// Desired discrete roots, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse::complex, allow_hyphen_values = true, required = true)]
    d: Vec<smdiff::num_complex::Complex64>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    nf: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Option<Vec<f64>>,
    #[arg(long, visible_alias = "L")]
    lipschitz: Option<f64>,
    #[arg(long)]
    w1_min: Option<f64>,
    #[arg(long)]
    w1_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

/// Exit status for a failed command: 2 for numerical failures, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    use smdiff::Error as E;
    match err.chain().find_map(|e| e.downcast_ref::<E>()) {
        Some(
            E::ConvergenceFailure { .. }
            | E::Singular
            | E::UnstableRoot { .. }
            | E::Unstable { .. }
            | E::LyapunovNoConvergence { .. }
            | E::NonFinite { .. }
            | E::Diverged { .. }
            | E::NoTruth,
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => commands::run(args),
        Command::Roots(args) => commands::roots(args),
        Command::Gains(args) => commands::gains(args),
        Command::Certify(args) => commands::certify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
