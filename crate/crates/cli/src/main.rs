//! `berkson`: scenario classification, bandwidth oracle, estimates and Monte
//! Carlo rate studies from JSON scenario files.

mod commands;
mod error;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "berkson", version, about = "Density deconvolution with small Berkson errors")]
struct Cli {
    /// Worker threads for Monte Carlo (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Run seed. Falls back to the config's `seed`, then `DECONV_SEED`, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Case of the envelope pair, envelopes and rho^2.
    Classify(Common),
    /// Rate-table bandwidth decision.
    Bandwidth(Common),
    /// Risk bound over a log grid of bandwidths.
    RiskBound {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1e-4)]
        h_min: f64,
        #[arg(long, default_value_t = 1.0)]
        h_max: f64,
        #[arg(long, default_value_t = 200)]
        h_points: usize,
    },
    /// Density estimate from one simulated replication.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: SeedArg,
        /// Bandwidth: a number, `oracle` or `zero`.
        #[arg(long, default_value = "oracle")]
        h: String,
        /// Replication index within the seed.
        #[arg(long, default_value_t = 0)]
        rep: u64,
        /// Clip negative values to zero (off by default).
        #[arg(long)]
        clip: bool,
    },
    /// Monte Carlo MISE at the config's n.
    Mise {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value = "oracle")]
        h: String,
        /// Overrides the config's `reps`.
        #[arg(long)]
        reps: Option<usize>,
    },
    /// MISE over the config's `n_list` and a log-log rate fit.
    Rates {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value = "oracle")]
        h: String,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Where to write the fit JSON in CSV mode. Without it the fit goes to stdout
        /// when the table goes to `--out`, and is omitted when the table is on stdout.
        #[arg(long)]
        fit_out: Option<PathBuf>,
    },
    /// Saddle-point consistency sweep for rows V-VIII.
    LaplaceCheck {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form example checks.
    Selftest,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))?;
    }
    match cli.command {
        Command::Classify(c) => commands::classify(&c),
        Command::Bandwidth(c) => commands::bandwidth(&c),
        Command::RiskBound { common, h_min, h_max, h_points } => commands::risk_bound(&common, h_min, h_max, h_points),
        Command::Estimate { common, seed, h, rep, clip } => commands::estimate(&common, seed.seed, &h, rep, clip),
        Command::Mise { common, seed, h, reps } => commands::mise(&common, seed.seed, &h, reps),
        Command::Rates { common, seed, h, reps, format, fit_out } => {
            commands::rates(&common, seed.seed, &h, reps, format, fit_out.as_deref())
        }
        Command::LaplaceCheck { out } => commands::laplace_check(out.as_deref()),
        Command::Selftest => selftest::run(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
