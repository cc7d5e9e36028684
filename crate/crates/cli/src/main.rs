use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use earl_cli::{commands, CliError, EXIT_OK};
use earl_core::Configuration;

/// Energy-aware hyperparameter search for liquid state machines.
#[derive(Parser)]
#[command(name = "earl", version)]
struct Cli {
    /// Log per-trial progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the optimizer and write trials.csv, pareto.csv, summary.txt and manifest.txt.
    Optimize {
        /// Flat key=value configuration file.
        config: PathBuf,
        /// Output directory.
        #[arg(short, long, default_value = "earl_run")]
        out: PathBuf,
        /// Setting overrides, `--key value` or `--key=value`, after all other options.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
        overrides: Vec<String>,
    },
    /// Score a single configuration.
    Evaluate {
        config: PathBuf,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        conn: f64,
        #[arg(long)]
        spectral: f64,
        #[arg(long)]
        leak: f64,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
        overrides: Vec<String>,
    },
    /// Write accuracy, energy and Pareto series from a trials.csv.
    Report {
        trials: PathBuf,
        /// Output directory; defaults to the directory holding the trials file.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Optimize { config, out, overrides } => {
            let (out, overrides) = take_out_flag(out, overrides)?;
            let o = commands::optimize(&config, &overrides, &out)?;
            print!("{}", commands::summary_text(&o.log, &o.summary));
            Ok(())
        }
        Command::Evaluate {
            config,
            size,
            conn,
            spectral,
            leak,
            overrides,
        } => {
            let c = Configuration {
                reservoir_size: size,
                connectivity: conn,
                spectral_radius: spectral,
                leak_rate: leak,
            };
            print!("{}", commands::evaluate_one(&config, &overrides, c)?);
            Ok(())
        }
        Command::Report { trials, out } => {
            let out = out.unwrap_or_else(|| {
                trials
                    .parent()
                    .filter(|p| !p.as_os_str().is_empty())
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            commands::report(&trials, &out)
        }
    }
}

/// `--out` given after the first override lands in the trailing list.
fn take_out_flag(mut out: PathBuf, args: Vec<String>) -> Result<(PathBuf, Vec<String>), CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "-o" || a == "--out" {
            out = it
                .next()
                .map(PathBuf::from)
                .ok_or_else(|| CliError::Config(format!("{a} is missing a value")))?;
        } else if let Some(v) = a.strip_prefix("--out=") {
            out = PathBuf::from(v);
        } else {
            rest.push(a);
        }
    }
    Ok((out, rest))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
