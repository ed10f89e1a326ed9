use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use siqr::batch::{noise_ensemble, Execution};
use siqr::cli::{cmd_check, cmd_estimate, cmd_identify, cmd_observe, cmd_simulate, exit_code};
use siqr::scenario::Scenario;
use siqr::{Error, Result};

#[derive(Parser)]
#[command(name = "siqr", version, about = "SIQR epidemic simulation, identification and observer-based estimation")]
struct Args {
    /// Scenario file (`key = value` lines); defaults apply to missing keys.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Switch measurement noise off.
    #[arg(long, global = true)]
    no_noise: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the model and write truth.csv.
    Simulate,
    /// Write clean and noisy outputs to measurements.csv.
    Observe,
    /// Run the observer and write estimates.csv and summary.txt.
    Estimate,
    /// Recover the parameters from the exact output jet at one instant.
    Identify {
        #[arg(long, value_name = "INSTANT")]
        t: f64,
    },
    /// Check assumptions, pole placement and the initial inequalities.
    Check,
    /// Repeat the estimation over several noise seeds and print final errors.
    Ensemble {
        /// Number of seeds, starting at the scenario seed.
        #[arg(long, default_value_t = 16)]
        runs: u64,
        /// Run sequentially instead of on the thread pool.
        #[arg(long)]
        sequential: bool,
    },
}

fn load(args: &Args) -> Result<Scenario> {
    let sc = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
            Scenario::parse(&text)?
        }
        None => Scenario::default(),
    };
    Ok(if args.no_noise { sc.without_noise() } else { sc })
}

fn run(args: &Args) -> Result<()> {
    let sc = load(args)?;
    match &args.command {
        Command::Simulate => println!("wrote {}", cmd_simulate(&sc)?.display()),
        Command::Observe => println!("wrote {}", cmd_observe(&sc)?.display()),
        Command::Estimate => println!("{}", cmd_estimate(&sc)?),
        Command::Identify { t } => println!("{}", cmd_identify(&sc, *t)?),
        Command::Check => println!("{}", cmd_check(&sc)?),
        Command::Ensemble { runs, sequential } => {
            let exec = if *sequential { Execution::Sequential } else { Execution::default() };
            let seeds: Vec<u64> = (0..*runs).map(|i| sc.noise.seed + i).collect();
            println!("seed,rho_rel_error,beta_rel_error,alpha_rel_error");
            for (seed, summary) in seeds.iter().zip(noise_ensemble(&sc, &seeds, exec)) {
                let s = summary?;
                println!("{seed},{},{},{}", s.rho_rel_error, s.beta_rel_error, s.alpha_rel_error);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
