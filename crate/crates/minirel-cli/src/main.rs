use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use minirel_cli::{cmd_cluster, cmd_experiment, cmd_prefix, cmd_round, CliError, Overrides};

/// Fair clustering with minimum-representation guarantees.
#[derive(Parser)]
#[command(name = "minirel", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the single-run subcommands.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Experiment config file (TOML).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Builtin dataset instead of a config: blobs, six-line, or theorem-gap.
    #[arg(long, value_name = "NAME")]
    data: Option<String>,
    /// RNG seed for the run.
    #[arg(long)]
    seed: Option<u64>,
    /// Assignment strategy: full-ip, two-stage-ip, two-stage-flow,
    /// prefix-flow, prefix-heur-flow, or fixed-center-adjust.
    #[arg(long)]
    strategy: Option<String>,
    /// Number of clusters.
    #[arg(long)]
    k: Option<usize>,
    /// Representation share α in (0, 1].
    #[arg(long)]
    alpha: Option<f64>,
    /// How per-group cluster targets are derived: statistical-parity,
    /// equal-opportunity, or custom (with [fairness].beta in the config).
    #[arg(long, value_name = "POLICY")]
    beta_policy: Option<String>,
    /// Require clusters of at least ⌈0.8·n/K⌉ points.
    #[arg(long)]
    balanced: bool,
    /// Wall-clock budget in seconds.
    #[arg(long, value_name = "SECS")]
    time_limit: Option<f64>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            config: self.config.clone(),
            data: self.data.clone(),
            seed: self.seed,
            strategy: self.strategy.clone(),
            k: self.k,
            alpha: self.alpha,
            beta_policy: self.beta_policy.clone(),
            balanced: self.balanced,
            time_limit: self.time_limit,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one fair clustering and print a summary.
    Cluster {
        #[command(flatten)]
        common: CommonArgs,
        /// Write the solution as JSON to this file.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Run a strategy × K × α × seed grid and write report files.
    Experiment {
        /// Experiment config file (TOML).
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Output directory for report.csv, timings.csv, summary.json, and
        /// assignments/.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Run only the polynomial pre-fixing stage and print which clusters
    /// represent which groups.
    Prefix {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Round a fractional assignment file through the flow network.
    Round {
        #[command(flatten)]
        common: CommonArgs,
        /// JSON file with alpha, beta, centers, y, and the fractional z.
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Write the rounding result as JSON to this file.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Cluster { common, out } => cmd_cluster(&common.overrides(), out.as_deref()),
        Command::Experiment { config, out } => cmd_experiment(&config, &out),
        Command::Prefix { common } => cmd_prefix(&common.overrides()),
        Command::Round { common, input, out } => {
            cmd_round(&common.overrides(), &input, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
