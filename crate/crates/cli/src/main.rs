use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;

#[derive(Debug, Parser)]
#[command(name = "fairfront", version, about = "Utility/fairness Pareto frontiers for group-specific threshold rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Args)]
pub struct Flags {
    /// Run configuration (JSON)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Threshold grid size M (thresholds k/M); defaults to the bin count
    #[arg(long, global = true)]
    pub grid: Option<usize>,

    /// Number of score bins N
    #[arg(long, global = true)]
    pub bins: Option<usize>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output file; stdout when absent
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Also write one frontier per rule type (always on for two groups)
    #[arg(long, global = true)]
    pub subfrontiers: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the configured population as a binned-density file
    Synth {
        /// Also draw this many labeled samples from the population
        #[arg(long, requires = "samples_out")]
        sample_count: Option<usize>,
        #[arg(long)]
        samples_out: Option<PathBuf>,
    },
    /// Estimate binned densities from a sample CSV (p_hat,group[,y][,d])
    Estimate {
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Compute the Pareto frontier over the threshold grid
    Frontier {
        /// Evaluate rules on the raw samples instead of the binned estimate
        #[arg(long)]
        empirical: bool,
    },
    /// Evaluate one policy file
    Eval {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        empirical: bool,
    },
    /// Compare observed points or a decision log against a frontier
    Audit {
        /// Frontier file (.json, or .csv)
        #[arg(long)]
        frontier: PathBuf,
        /// Observed points CSV (e_u,fs[,label])
        #[arg(long, conflicts_with = "log")]
        observed: Option<PathBuf>,
        /// Decision log CSV (p_hat,group,d[,y])
        #[arg(long)]
        log: Option<PathBuf>,
        /// Bins for decision-profile reconstruction [default: 25]
        #[arg(long)]
        profile_bins: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let flags = &cli.flags;
    let result = match &cli.command {
        Command::Synth {
            sample_count,
            samples_out,
        } => commands::synth(flags, *sample_count, samples_out.as_deref()),
        Command::Estimate { samples } => commands::estimate(flags, samples.as_deref()),
        Command::Frontier { empirical } => commands::frontier(flags, *empirical),
        Command::Eval { policy, empirical } => commands::eval(flags, policy, *empirical),
        Command::Audit {
            frontier,
            observed,
            log,
            profile_bins,
        } => commands::audit(flags, frontier, observed.as_deref(), log.as_deref(), *profile_bins),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
