//! Command-line front end: configure, run, and export experiments and
//! per-iteration score snapshots.
//!
//! Subcommands:
//!
//! ```text
//! synth      synthetic instance -> policy rollouts -> curves CSV
//! dataset    CSV instance -> policy rollouts -> curves CSV
//! compare    synth or dataset, dispatched on the config's dataset key
//! snapshot   one knowledge-gradient replication, score rows per iteration
//! validate   run the numerical oracle suites and report deviations
//! ```
//!
//! All randomness flows from the config's seed (optionally overridden by
//! --seed), so identical invocations write identical bytes.

use crate::diagnostics::run_all_checks;
use crate::error::{Error, Result};
use crate::harness::{
    load_config, run_experiment, run_snapshot, write_curves_csv, write_snapshot_csv,
    ExperimentConfig,
};
use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "kglearn",
    about = "Knowledge-gradient benchmark harness for sequential binary-feedback experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON experiment configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Master seed override.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Comma-separated policy list override.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    policies: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the synthetic-instance benchmark and write aggregated curves.
    Synth(CommonArgs),
    /// Run the benchmark on a CSV dataset named by the config.
    Dataset(CommonArgs),
    /// Run whichever benchmark the config describes.
    Compare(CommonArgs),
    /// Record every alternative's scores at each iteration of one run.
    Snapshot {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write the final posterior as JSON.
        #[arg(long, value_name = "PATH")]
        belief_out: Option<PathBuf>,
    },
    /// Run the numerical oracle suites and print a report.
    Validate {
        /// JSON experiment configuration (only the seed is used).
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
}

fn effective_config(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = load_config(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(policies) = &common.policies {
        cfg.policies = policies.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_file<F: FnOnce(File) -> Result<()>>(path: &Path, write: F) -> Result<()> {
    let file = File::create(path)?;
    write(file)
}

enum InstanceSource {
    Synthetic,
    Dataset,
    FromConfig,
}

fn run_curves(common: &CommonArgs, source: InstanceSource) -> Result<()> {
    let mut cfg = effective_config(common)?;
    match source {
        InstanceSource::Synthetic => cfg.dataset = None,
        InstanceSource::Dataset if cfg.dataset.is_none() => {
            return Err(Error::Config(
                "dataset subcommand needs a dataset key in the config".to_string(),
            ))
        }
        _ => {}
    }
    let result = run_experiment(&cfg)?;
    write_file(&common.out, |f| write_curves_csv(f, &result))?;
    println!(
        "wrote {} ({} policies x {} steps, {} replications)",
        common.out.display(),
        result.policy_names.len(),
        result.budget,
        result.records.first().map_or(0, Vec::len)
    );
    Ok(())
}

fn run_snapshot_cmd(common: &CommonArgs, belief_out: Option<&Path>) -> Result<()> {
    let cfg = effective_config(common)?;
    let (rows, belief) = run_snapshot(&cfg)?;
    write_file(&common.out, |f| write_snapshot_csv(f, &rows))?;
    println!("wrote {} ({} rows)", common.out.display(), rows.len());
    if let Some(path) = belief_out {
        let json = serde_json::to_string_pretty(&belief)?;
        let mut file = File::create(path)?;
        file.write_all(json.as_bytes())?;
        file.write_all(b"\n")?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_validate(config_path: &Path) -> Result<()> {
    let cfg = load_config(config_path)?;
    let reports = run_all_checks(cfg.seed)?;
    let mut all_pass = true;
    for report in &reports {
        all_pass &= report.pass;
        println!(
            "{}: {} ({} cases, max deviation {:.3e}, tolerance {:.1e})",
            if report.pass { "PASS" } else { "FAIL" },
            report.name,
            report.cases,
            report.max_deviation,
            report.tolerance
        );
    }
    if all_pass {
        Ok(())
    } else {
        Err(Error::Config(
            "one or more oracle checks failed".to_string(),
        ))
    }
}

/// Parses arguments and runs one subcommand; the process exit code is 0
/// exactly when all requested work completed.
pub fn run() -> std::process::ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Synth(common) => run_curves(common, InstanceSource::Synthetic),
        Command::Dataset(common) => run_curves(common, InstanceSource::Dataset),
        Command::Compare(common) => run_curves(common, InstanceSource::FromConfig),
        Command::Snapshot { common, belief_out } => run_snapshot_cmd(common, belief_out.as_deref()),
        Command::Validate { config } => run_validate(config),
    };
    match outcome {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            std::process::ExitCode::FAILURE
        }
    }
}
