use clap::{Args, Parser, Subcommand};
use holofuse_cli::config::{ExperimentConfig, SCENARIO_IDS};
use holofuse_cli::scenario::{self, Scenario};
use serde_json::json;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "holofuse", version, about = "Distributed detection with a holographic fusion receiver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its result tables plus provenance.
    Run(RunArgs),
    /// Check a configuration, reporting every violation at once.
    Validate {
        /// TOML configuration file; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// List the scenario identifiers.
    Scenarios,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario id; defaults to the one named in the configuration.
    scenario: Option<String>,
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per hypothesis, overriding the configuration.
    #[arg(long)]
    trials: Option<usize>,
    /// Channel redraws per point, overriding the configuration.
    #[arg(long)]
    redraws: Option<usize>,
    /// Worker threads; results are identical for any value.
    #[arg(long)]
    threads: Option<usize>,
}

/// Process failure: exit code plus a machine-readable report for stderr.
struct Failure {
    code: i32,
    report: serde_json::Value,
}

impl Failure {
    fn config(violations: Vec<String>) -> Self {
        Self {
            code: 2,
            report: json!({"error": {"kind": "config", "violations": violations}}),
        }
    }

    fn runtime(err: &anyhow::Error) -> Self {
        let chain: Vec<String> = err.chain().map(|c| c.to_string()).collect();
        Self {
            code: 1,
            report: json!({"error": {"kind": "runtime", "message": err.to_string(), "chain": chain}}),
        }
    }
}

fn main() {
    if let Err(failure) = dispatch(Cli::parse()) {
        eprintln!(
            "{}",
            serde_json::to_string_pretty(&failure.report).expect("report serializes")
        );
        std::process::exit(failure.code);
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Scenarios => {
            for id in SCENARIO_IDS {
                println!("{id}");
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = load_config(config.as_deref())?;
            let violations = cfg.validate();
            if violations.is_empty() {
                println!("{}", json!({"valid": true}));
                Ok(())
            } else {
                Err(Failure::config(violations))
            }
        }
        Command::Run(args) => run(args),
    }
}

fn load_config(path: Option<&std::path::Path>) -> Result<ExperimentConfig, Failure> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => ExperimentConfig::from_path(p).map_err(|e| Failure::runtime(&e)),
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(s) = args.scenario {
        cfg.scenario = s;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(redraws) = args.redraws {
        cfg.redraws = redraws;
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }

    let violations = cfg.validate();
    if !violations.is_empty() {
        return Err(Failure::config(violations));
    }
    let scenario = Scenario::parse(&cfg.scenario).expect("validation admits only known ids");

    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::runtime(&anyhow::Error::new(e).context("thread pool setup")))?;
    }

    let out_dir = cfg.output_dir.clone();
    let report = scenario::run(scenario, &cfg, &out_dir).map_err(|e| Failure::runtime(&e))?;
    println!("scenario {} complete", report.scenario);
    for file in report.files {
        println!("wrote {}", file.display());
    }
    Ok(())
}
