use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use memincl_cli::bundled;
use memincl_cli::commands::{cmd_check, cmd_run, cmd_sweep, Exit, Settings, SweepParam};

/// Solve evolution inclusions with exponential memory from scenario files.
#[derive(Parser)]
#[command(name = "memincl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file, or the name of a bundled scenario.
    scenario: String,
    /// Override a scenario key, e.g. `--set memory.lambda_per_time=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Seed for the randomized checkers (overrides the scenario seed).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_newton: Option<f64>,
    #[arg(long)]
    tol_fp: Option<f64>,
}

impl Common {
    fn settings(&self) -> Settings {
        Settings {
            overrides: self.set.clone(),
            seed: self.seed,
            tol_newton: self.tol_newton,
            tol_fp: self.tol_fp,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write trajectories, ledger and reports.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the operator and field assumption checkers.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Run one scenario per parameter value and tabulate the results.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// List the bundled scenarios.
    List,
}

fn main() -> ExitCode {
    let exit = match Cli::parse().command {
        Command::Run { common, out } => cmd_run(&common.scenario, &out, &common.settings()),
        Command::Check { common } => cmd_check(&common.scenario, &common.settings()),
        Command::Sweep {
            common,
            param,
            values,
            out,
            jobs,
        } => {
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(j) = jobs {
                pool = pool.num_threads(j);
            }
            match pool.build() {
                Ok(pool) => pool.install(|| cmd_sweep(&common.scenario, param, &values, &out, &common.settings())),
                Err(e) => {
                    eprintln!("error: {e}");
                    Exit::Parse
                }
            }
        }
        Command::List => {
            for name in bundled::names() {
                println!("{name}");
            }
            Exit::Ok
        }
    };
    ExitCode::from(exit.code() as u8)
}
