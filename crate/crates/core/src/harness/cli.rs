use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::{run_experiment, write_rows, ExperimentKind, ExperimentSpec};
use crate::config::{key_reference, FileConfig};
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "irs-noma",
    version,
    about = "IRS-assisted downlink NOMA simulator: DDPG phase learning, exhaustive-search oracle, Monte-Carlo sweeps",
    after_help = key_reference(),
    after_long_help = key_reference()
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Key-value config file (see CONFIG KEYS below)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Base seed; run i uses seed + i [default: the config's `seed`]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Results CSV [default: stdout]
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Monte-Carlo runs [default: the config's `runs`]
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    /// Write 0 in the wall_time_s column
    #[arg(long, global = true)]
    pub deterministic: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a DDPG agent per run (see `fresh_channels`)
    Train {
        /// Per-step training log CSV
        #[arg(long, value_name = "PATH")]
        log: Option<PathBuf>,
        /// Save each run's networks under DIR/run-<i>
        #[arg(long, value_name = "DIR")]
        checkpoint: Option<PathBuf>,
    },
    /// Greedy rollouts of a saved policy on fresh channels
    Eval {
        /// Directory holding a saved agent (e.g. DIR/run-0 from `train`)
        #[arg(long, value_name = "DIR")]
        checkpoint: Option<PathBuf>,
    },
    /// Exhaustive phase search per run
    Oracle,
    /// NOMA vs OMA sum rate across the `users` list
    SweepUsers,
    /// Sum rate across `power_levels_dbm`
    SweepPower,
    /// Nearest-user rate across `epsilons`
    SweepEps,
    /// DDPG best vs oracle best on the same channels
    CompareUpperbound,
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Train { .. } => ExperimentKind::TrainCurve,
            Command::Eval { .. } => ExperimentKind::PolicyEval,
            Command::Oracle => ExperimentKind::OracleOnly,
            Command::SweepUsers => ExperimentKind::NomaVsOmaUsers,
            Command::SweepPower => ExperimentKind::PowerSweep,
            Command::SweepEps => ExperimentKind::EpsilonSweep,
            Command::CompareUpperbound => ExperimentKind::UpperboundCompare,
        }
    }
}

impl Cli {
    pub fn into_spec(self) -> Result<ExperimentSpec> {
        let path = self
            .global
            .config
            .ok_or_else(|| Error::Config("the --config <PATH> flag is required".into()))?;
        let file = FileConfig::load(&path)?;
        let kind = self.command.kind();
        let seed = self.global.seed.unwrap_or(file.train.seed);
        let mut spec = ExperimentSpec::new(kind, file.system, file.train, file.sweep, seed);
        if let Some(runs) = self.global.runs {
            spec.sweep.runs = runs;
        }
        spec.output = self.global.out;
        spec.deterministic = self.global.deterministic;
        match self.command {
            Command::Train { log, checkpoint } => {
                spec.train_log = log;
                spec.checkpoint = checkpoint;
            }
            Command::Eval { checkpoint } => {
                spec.checkpoint =
                    Some(checkpoint.ok_or_else(|| Error::Config("eval requires --checkpoint <DIR>".into()))?);
            }
            _ => {}
        }
        Ok(spec)
    }
}

/// Parses `argv` (program name first) and runs the command. Returns 0 on
/// success, 2 on usage or configuration errors and 1 on runtime failures.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let spec = cli.into_spec()?;
    let rows = run_experiment(&spec)?;
    if spec.output.is_none() {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        write_rows(&rows, &mut lock)?;
        lock.flush()?;
    }
    Ok(())
}
