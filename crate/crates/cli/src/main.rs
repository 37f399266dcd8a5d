use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dnsde_cli::experiments::{hypothesis_warnings, threads_from_env, with_threads, FailureReport};
use dnsde_cli::{parse_config, presets, run, Experiment, ExperimentConfig};

/// Experiments for doubly nonlinear stochastic evolution equations.
#[derive(Debug, Parser)]
#[command(name = "dnsde", version)]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,

    /// TOML experiment file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in scenario: stefan, nonlocal-a, fractional-b, stress-stefan.
    /// Used when neither flag is given: stefan.
    #[arg(long)]
    preset: Option<String>,

    #[arg(long)]
    seed: Option<u64>,

    /// Monte Carlo path count.
    #[arg(long)]
    paths: Option<usize>,

    /// Output directory; overrides the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Exit 0 even when a check fails.
    #[arg(long)]
    allow_violations: bool,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), _) => parse_config(path).map_err(|e| e.to_string())?,
        (None, Some(name)) => presets::preset(name).map_err(|e| e.to_string())?,
        (None, None) => presets::preset("stefan").map_err(|e| e.to_string())?,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(paths) = cli.paths {
        cfg.paths = paths;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.display().to_string();
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn fail(experiment: Experiment, config_hash: Option<String>, error: String) -> ExitCode {
    let report = FailureReport {
        experiment: experiment.name().into(),
        config_hash,
        error,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => return fail(cli.experiment, None, e),
    };
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => return fail(cli.experiment, None, e),
    };
    for w in hypothesis_warnings(&cfg) {
        eprintln!("warning: {w}");
    }
    eprintln!("running {}", dnsde_cli::experiments::describe(cli.experiment, &cfg));
    let outcome = match with_threads(threads, || run(cli.experiment, &cfg)) {
        Ok(o) => o,
        Err(e) => return fail(cli.experiment, Some(cfg.hash_hex()), e.to_string()),
    };
    if let Err(e) = outcome.write(&PathBuf::from(&cfg.out)) {
        return fail(cli.experiment, Some(cfg.hash_hex()), e.to_string());
    }
    print!("{}", outcome.verdict.to_json());
    for c in outcome.verdict.checks.iter().filter(|c| !c.pass) {
        eprintln!("violation: {} measured {:e} (threshold {:e})", c.name, c.measured, c.threshold);
    }
    if outcome.verdict.passed() || cli.allow_violations {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
