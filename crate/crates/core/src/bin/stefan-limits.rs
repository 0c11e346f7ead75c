use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stefan_limits::experiments::{run_study, Config, Study};

#[derive(Parser, Debug)]
#[command(name = "stefan-limits", version, about = "Singular-limit studies for the linearized two-phase Stefan problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory for CSV and JSON artifacts
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// ratio of solution norm to data norm over a (delta, sigma) grid
    Uniformity,
    /// error sweep toward one of the five limit points
    Limit {
        /// overrides `limit.limit_type` of the config
        #[arg(long = "type", value_parser = clap::value_parser!(u8).range(1..=5))]
        limit_type: Option<u8>,
    },
    /// sampled symbol bounds on the sector product
    Sector,
    /// one solve with residual and compatibility checks
    Validate,
    /// spectral solver against the finite-difference oracle
    CrossCheck,
}

fn init_threads() {
    if let Ok(v) = std::env::var("STEFAN_LIMITS_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("warning: could not size the thread pool: {e}");
                }
            }
            _ => eprintln!("warning: ignoring STEFAN_LIMITS_THREADS={v:?}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let Some(path) = cli.config.as_ref() else {
        eprintln!("error: --config <PATH> is required");
        return ExitCode::from(1);
    };
    let mut cfg = match Config::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(1);
        }
    };
    init_threads();
    let study = match cli.command {
        Command::Uniformity => Study::Uniformity,
        Command::Limit { limit_type } => {
            if let Some(t) = limit_type {
                cfg.limit.limit_type = t;
            }
            Study::Limit
        }
        Command::Sector => Study::Sector,
        Command::Validate => Study::Validate,
        Command::CrossCheck => Study::CrossCheck,
    };
    match run_study(study, &cfg, &cli.out) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.fail {
                for r in &outcome.reasons {
                    println!("FAIL: {r}");
                }
                ExitCode::from(2)
            } else {
                println!("ok");
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
