use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use flrw_kinetic::cli::{self, CliError, Outcome};
use flrw_kinetic::config::{load_config, Mode};

#[derive(Parser)]
#[command(
    name = "embsim",
    version,
    about = "Homogeneous Einstein-Maxwell-Boltzmann FLRW simulator"
)]
struct Args {
    /// Log progress at debug level.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solve described by a configuration file.
    Simulate {
        config: PathBuf,
        /// Output directory; overrides `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite.
    Verify {
        suite: Suite,
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat a run for several values of one configuration entry.
    Sweep {
        config: PathBuf,
        /// Dotted path of the entry, e.g. `physics.rho`.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Collision,
    Energy,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(args.command) {
        Ok(outcome) => ExitCode::from(outcome.code() as u8),
        Err(e) => {
            eprintln!("embsim: {e}");
            ExitCode::from(e.outcome().code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Simulate { config, out } => {
            let cfg = load_config(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output.directory.clone());
            let art = cli::run(&cfg, &dir)?;
            print!("{}", art.report);
            Ok(art.outcome)
        }
        Command::Verify { suite, config, out } => {
            let mut cfg = load_config(&config)?;
            cfg.mode = match suite {
                Suite::Collision => Mode::VerifyCollision,
                Suite::Energy => Mode::VerifyEnergy,
            };
            let art = match out {
                Some(dir) => cli::run(&cfg, &dir)?,
                None => cli::execute(&cfg)?,
            };
            print!("{}", art.report);
            Ok(art.outcome)
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let cfg = load_config(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output.directory.clone());
            let (worst, entries) = cli::sweep(&cfg, &param, &values, &dir)?;
            for e in entries {
                println!("{param}={}\texit {}\t{}", e.value, e.outcome.code(), e.summary);
            }
            Ok(worst)
        }
    }
}
