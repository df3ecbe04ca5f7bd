use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Relay precoder design experiments for MIMO switching.
#[derive(Debug, Parser)]
#[command(name = "mimo-switch", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Two-station throughput table.
    Table1(Common),
    /// Four-station throughput table.
    Table2(Common),
    /// SNR sweep over a list of schemes, written as long-format plot data.
    Sweep(SweepArgs),
    /// Every selected scheme on one channel realization.
    Single(Common),
    /// Runs the invariant suites; exits non-zero if any fails.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML file with sweep settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Channel realizations per SNR point.
    #[arg(long)]
    pub channels: Option<usize>,
    /// Comma-separated SNR points in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr: Option<Vec<f64>>,
    /// `pairwise` or `nonpairwise`.
    #[arg(long)]
    pub pattern: Option<String>,
    /// Number of stations.
    #[arg(long)]
    pub stations: Option<usize>,
    /// Comma-separated scheme names.
    #[arg(long, value_delimiter = ',')]
    pub schemes: Option<Vec<String>>,
    #[arg(long, env = "MIMOSWITCH_OUT", default_value = "results")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Also write a whitespace-separated `sweep.dat` (one column per scheme).
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Random instances per design suite.
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    /// Corrupt the power kernel to check that the PSD suite catches it.
    #[arg(long)]
    pub inject_fault: bool,
    #[arg(long)]
    pub threads: Option<usize>,
}
