//! Scenario runner. Reads a `key = value` config, runs one scenario and writes
//! `summary.json` and CSV files into the output directory.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use grushin::cli::{parse_config, run, RunConfig, Scenario};

#[derive(Parser, Debug)]
#[command(name = "grushin-lab", version, about = "Run one experiment of the Grushin laboratory")]
struct Args {
    /// Scenario to run; overrides nothing, but must agree with the config if both are given.
    #[arg(value_parser = parse_scenario)]
    scenario: Option<Scenario>,

    /// Config file in `key = value` format.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for per-mode and per-scan parallelism.
    #[arg(long)]
    threads: Option<usize>,

    /// Extra `key=value` settings applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse()
}

fn resolve(args: &Args) -> Result<RunConfig, String> {
    let mut cfg = match (&args.config, args.scenario) {
        (Some(path), sc) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let cfg = parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            if let Some(sc) = sc {
                if sc != cfg.scenario {
                    return Err(format!(
                        "scenario `{sc}` on the command line differs from `{}` in the config",
                        cfg.scenario
                    ));
                }
            }
            cfg
        }
        (None, Some(sc)) => RunConfig::defaults(sc),
        (None, None) => return Err("give a scenario or --config".into()),
    };
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
        cfg.set(k.trim(), v.trim(), 0).map_err(|e| format!("--set {kv}: {e}"))?;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match resolve(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: cannot configure threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cfg) {
        Ok(outcome) if outcome.passed() => {
            println!("{}: ok ({})", cfg.scenario, cfg.out.display());
            ExitCode::SUCCESS
        }
        Ok(outcome) => {
            for f in &outcome.failures {
                eprintln!("invariant failed: {}: {}", f.invariant, f.detail);
            }
            eprintln!("failure record: {}", cfg.out.join("failure.json").display());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
