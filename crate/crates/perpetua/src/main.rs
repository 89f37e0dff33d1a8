use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use perpetua::config::{parse_config, validate, ExperimentKind, Overrides};
use perpetua::experiments::{config_hash, run};
use perpetua::output::{emit, Verdict};

/// Run a perpetuity simulation or verification experiment.
#[derive(Debug, Parser)]
#[command(name = "perpetua", version)]
struct Args {
    /// Experiment kind; overrides `experiment.kind` in the config.
    kind: ExperimentKind,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of replications.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Output prefix; `<out>.csv` and `<out>.json` are written.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
}

fn env_workers() -> Option<usize> {
    std::env::var("PERPETUA_WORKERS").ok()?.trim().parse().ok()
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn execute(args: &Args) -> Result<u8, perpetua::CliError> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut config = parse_config(&text)?;
    config.apply(&Overrides {
        kind: Some(args.kind),
        seed: args.seed,
        reps: args.reps,
        horizon: args.horizon,
        out: args.out.clone(),
        workers: args.workers,
    });
    let v = validate(config, env_workers())?;
    let record = run(&v, &config_hash(&text))?;
    let out = v.config.run.output.clone().unwrap_or_else(|| format!("perpetua-{}", v.kind));
    let (csv, json) = emit(&record, out.as_ref())?;
    let verdict = record.verdict();
    for c in &record.checks {
        println!("{:<28} {:>14.6} {:>6} {:<12} {}", c.name, c.value, c.relation, c.bound, if c.pass { "ok" } else { "FAIL" });
    }
    let word = if verdict == Verdict::Pass { "PASS" } else { "FAIL" };
    println!("{} {word} -> {}, {}", v.kind, csv.display(), json.display());
    Ok(verdict.exit_code() as u8)
}
