mod config;
mod error;
mod experiment;
mod fields;
mod selftest;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::fields::Field;

/// Single-source/single-target Eikonal solvers with A*-type domain
/// restriction.
#[derive(Parser)]
#[command(name = "eikonal-astar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// INI experiment file; built-in defaults when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set instance.m=201,401`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Print the resolved configuration and its hash to stderr.
    #[arg(long)]
    print_config: bool,
}

impl Common {
    fn load(&self, extra: &[String]) -> CliResult<ExperimentConfig> {
        let mut all = extra.to_vec();
        all.extend(self.overrides.iter().cloned());
        let cfg = ExperimentConfig::load(self.config.as_deref(), &all)?;
        if self.print_config {
            eprint!("{}", cfg.describe());
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured method once per size and lambda (no repeats).
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Like `solve`, with wall time taken as the median of `run.repeat` runs
    /// (default 10).
    Bench {
        #[command(flatten)]
        common: Common,
    },
    /// Dump per-node fields for the first size and method.
    Fields {
        #[command(flatten)]
        common: Common,
        /// Comma-separated: u, labels, alpha, masks.
        #[arg(long, value_delimiter = ',', default_value = "u")]
        which: Vec<Field>,
        #[arg(long, default_value = "fields")]
        out_dir: PathBuf,
    },
    /// Sensitivity coefficients and their decay away from the path.
    Alpha {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "alpha")]
        out_dir: PathBuf,
    },
    /// Short built-in consistency checks; exit status 3 on failure.
    Selftest,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve { common } => {
            let cfg = common.load(&["run.repeat=1".to_string()])?;
            let reports = experiment::run_experiment(&cfg)?;
            experiment::write_outputs(&cfg, &reports, io::stdout().lock())
        }
        Command::Bench { common } => {
            let cfg = common.load(&[])?;
            let reports = experiment::run_experiment(&cfg)?;
            experiment::write_outputs(&cfg, &reports, io::stdout().lock())
        }
        Command::Fields { common, which, out_dir } => {
            let cfg = common.load(&[])?;
            for name in fields::dump_fields(&cfg, &which, &out_dir)? {
                println!("{}", out_dir.join(name).display());
            }
            Ok(())
        }
        Command::Alpha { common, out_dir } => {
            let cfg = common.load(&[])?;
            let s = fields::alpha_report(&cfg, &out_dir)?;
            match (s.slope, s.all_monotone) {
                (Some(slope), Some(mono)) => println!("m={} slope={slope:.4} monotone={mono}", s.m),
                _ => println!("m={} (no decay fit outside 2D)", s.m),
            }
            Ok(())
        }
        Command::Selftest => selftest::run(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
