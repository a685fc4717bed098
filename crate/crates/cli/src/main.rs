use std::path::PathBuf;
use std::process::ExitCode;

use bifluid::config::{parse_config, RawConfig};
use bifluid::eos::convexity_constants;
use bifluid::output::{compare_dirs, error_json, run_to_dir, sweep, to_pretty_json};
use bifluid::{Error, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

/// Samples used by `verify eos`.
const VERIFY_SAMPLES: usize = 1000;

#[derive(Parser)]
#[command(name = "bifluid", version, about = "1D bi-fluid compressible flow laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write trace.csv, snapshots.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Certification checks.
    Verify {
        #[command(subcommand)]
        what: Verify,
    },
    /// Relative energy of a coarse run against a finer one; writes compare.json.
    Compare {
        #[arg(long)]
        coarse: PathBuf,
        #[arg(long)]
        fine: PathBuf,
    },
    /// Independent concurrent runs, one per value of a config key.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `key=v1,v2,...`
        #[arg(long)]
        vary: String,
    },
}

#[derive(Subcommand)]
enum Verify {
    /// Convexity constants of the pressure law in the config.
    Eos {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            let cfg = parse_config(&config)?;
            run_to_dir(&cfg)?;
            println!("{}", cfg.output_dir.display());
        }
        Command::Verify { what: Verify::Eos { config } } => {
            let cfg = parse_config(&config)?;
            match convexity_constants(&cfg.eos, VERIFY_SAMPLES) {
                Ok(report) => print!("{}", to_pretty_json(&serde_json::to_value(report).expect("report"))),
                Err(e) => {
                    if let Error::Certification { report, .. } = &e {
                        print!("{}", to_pretty_json(&serde_json::to_value(report.as_ref()).expect("report")));
                    }
                    return Err(e);
                }
            }
        }
        Command::Compare { coarse, fine } => {
            let out = compare_dirs(&coarse, &fine)?;
            print!("{}", to_pretty_json(&out));
            if out["gronwall"]["pass"] != json!(true) {
                return Err(Error::InvariantViolation("Gronwall check failed".into()));
            }
        }
        Command::Sweep { config, vary } => {
            let (key, values) = vary.split_once('=').ok_or_else(|| Error::Parse {
                line: 0,
                key: vary.clone(),
                message: "expected --vary key=v1,v2,...".into(),
            })?;
            let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
            let raw = RawConfig::parse(&std::fs::read_to_string(&config)?)?;
            let results = sweep(&raw, key.trim(), &values)?;
            let mut worst: Option<Error> = None;
            for r in results {
                let status = match &r.result {
                    Ok(()) => json!({"value": r.value, "dir": r.dir, "exit_code": 0}),
                    Err(e) => json!({"value": r.value, "dir": r.dir, "exit_code": e.exit_code()}),
                };
                println!("{status}");
                if let Err(e) = r.result {
                    if worst.as_ref().map_or(true, |w| e.exit_code() > w.exit_code()) {
                        worst = Some(e);
                    }
                }
            }
            if let Some(e) = worst {
                return Err(e);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!(error_json(&e)["error"]));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
