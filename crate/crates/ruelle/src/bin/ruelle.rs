use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ruelle::cli;
use ruelle::RuelleError;

#[derive(Parser)]
#[command(name = "ruelle", version, about = "Transfer-operator runs driven by JSON configs")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a config and write JSON + CSV artifacts.
    Run {
        /// Path to the JSON config.
        #[arg(long)]
        config: PathBuf,
        /// Override a top-level scalar key, as key=value (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory for artifacts.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the potentials a config can name, with their parameters.
    ListPotentials,
}

fn main() -> ExitCode {
    match real_main(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                // config problems exit 2 so scripts can tell them from
                // numerical or io failures
                RuelleError::Config(_)
                | RuelleError::Json(_)
                | RuelleError::Domain(_)
                | RuelleError::MissingSeed => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn real_main(args: Args) -> Result<(), RuelleError> {
    match args.command {
        Cmd::Run { config, set, out } => {
            let text = std::fs::read_to_string(&config)?;
            let (_, mut raw) = cli::load_config(&text)?;
            if !set.is_empty() {
                cli::apply_overrides(&mut raw, &set)?;
            }
            let outcome = cli::run(&raw, &out)?;
            println!("{}", outcome.summary);
            println!("wrote {}", outcome.json_path.display());
            for p in &outcome.csv_paths {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Cmd::Validate { config } => {
            let text = std::fs::read_to_string(&config)?;
            let (parsed, _) = cli::load_config(&text)?;
            println!("ok: {} run over potential \"{}\"", parsed.command, parsed.potential.name);
            Ok(())
        }
        Cmd::ListPotentials => {
            for line in cli::registry_lines() {
                println!("{line}");
            }
            Ok(())
        }
    }
}
