use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use diamond_node::par::Execution;
use diamond_node::runner::{previous_config_hash, run_experiment, ExperimentConfig, ExperimentKind, RunOptions, Tier};
use diamond_node::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_BUDGET: u8 = 4;

/// Runs one experiment and writes `<experiment>.csv` plus a JSON metadata
/// sidecar.
#[derive(Parser, Debug)]
#[command(name = "diamond-node", version)]
struct Args {
    /// error-scaling | time-trace | purity-sweep | combined | cavity-params
    experiment: String,
    /// JSON experiment config; unknown keys are rejected.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads for independent rows.
    #[arg(long)]
    jobs: Option<usize>,
    /// Optimiser seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// generic | full-cesium | full-rubidium
    #[arg(long)]
    tier: Option<String>,
}

fn run(args: &Args) -> Result<bool, Error> {
    let kind: ExperimentKind = args.experiment.parse()?;
    let tier = args.tier.as_deref().map(str::parse::<Tier>).transpose()?;
    if args.jobs == Some(0) {
        return Err(Error::Config { field: "jobs".into(), reason: "must be at least 1".into() });
    }
    let config = ExperimentConfig::load(&args.config)?.resolve(kind, tier, args.seed)?;
    let hash = config.hash();
    if previous_config_hash(&args.out, kind.name()).as_deref() == Some(hash.as_str()) {
        log::info!("{} already holds a run of this config ({hash}); rewriting", args.out.display());
    }
    let exec = if args.jobs == Some(1) { Execution::Sequential } else { Execution::Parallel };
    let table = run_experiment(&config, RunOptions { exec, jobs: args.jobs })?;
    let (csv, json) = table.write(&args.out, kind.name())?;
    println!("{}", csv.display());
    println!("{}", json.display());
    Ok(table.metadata.budget_exhausted)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("warning: optimiser budget exhausted; results written");
            ExitCode::from(EXIT_BUDGET)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                e if e.is_numerical() => EXIT_NUMERICAL,
                Error::Io(_) => 1,
                _ => EXIT_CONFIG,
            };
            ExitCode::from(code)
        }
    }
}
