use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geostoch::experiments::{list_experiments, run_experiment, ExperimentConfig};

/// Run stochastic-integral verification experiments.
#[derive(Parser)]
#[command(name = "geostoch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a key=value config file.
    Run {
        config: PathBuf,
        /// Override a config entry (repeatable), e.g. `--set n=2000`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print the experiment catalog.
    List,
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("GEOSTOCH_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("GEOSTOCH_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            print!("{}", list_experiments());
            ExitCode::SUCCESS
        }
        Command::Run { config, overrides } => {
            if let Err(e) = init_threads() {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            let run = || -> geostoch::Result<_> {
                let mut cfg = ExperimentConfig::from_file(&config)?;
                for kv in &overrides {
                    cfg.set(kv)?;
                }
                run_experiment(&cfg)
            };
            match run() {
                Ok(m) => {
                    for c in &m.criteria {
                        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                    }
                    println!("wrote {}", m.artifacts.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "));
                    if m.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
