use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use streamcvi::cvi::IndexKind;
use streamcvi::datagen::{Dataset, RNG_ALGORITHM};
use streamcvi::io::{change_event_records, write_events, write_stream};
use streamcvi::par::Execution;
use streamcvi::scenario::{Overrides, ScenarioFile};
use streamcvi::verify::{verify, DEFAULT_TOLERANCE};
use streamcvi::Result;

#[derive(Parser)]
#[command(name = "streamcvi", version, about = "Incremental cluster validity indices for data streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic stream (x1,x2,label) and its change-event sidecar.
    Generate {
        /// s1, s2 or s3.
        dataset: Dataset,
        #[arg(long)]
        seed: Option<u64>,
        /// Stream CSV path; events go to the same stem with `.events.jsonl`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run named scenarios and write their traces and event logs.
    Run(RunArgs),
    /// Compare incremental indices against batch recomputation.
    Verify {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Run trials on one thread.
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario names; all scenarios when omitted.
    names: Vec<String>,
    #[arg(long, default_value = "scenarios.toml")]
    scenario_file: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Number of clusters (sequential k-means scenarios only).
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated subset of xb,xb_lambda,db,db_lambda.
    #[arg(long, value_delimiter = ',')]
    indices: Option<Vec<IndexKind>>,
}

fn events_sidecar(out: &Path) -> PathBuf {
    out.with_extension("events.jsonl")
}

fn generate(dataset: Dataset, seed: Option<u64>, out: &Path) -> Result<()> {
    let seed = seed.unwrap_or_else(|| dataset.default_seed());
    let stream = dataset.generate(seed);
    write_stream(&stream, out)?;
    let sidecar = events_sidecar(out);
    write_events(&change_event_records(&stream.change_events), &sidecar)?;
    println!(
        "{dataset} seed={seed} rng={RNG_ALGORITHM}: {} points, {} change events -> {}, {}",
        stream.len(),
        stream.change_events.len(),
        out.display(),
        sidecar.display()
    );
    Ok(())
}

fn run(args: &RunArgs) -> Result<()> {
    let file = ScenarioFile::load(&args.scenario_file)?;
    let overrides = Overrides {
        seed: args.seed,
        lambda: args.lambda,
        k: args.k,
        indices: args.indices.clone(),
    };
    let names: Vec<String> = if args.names.is_empty() {
        file.scenario.iter().map(|s| s.name.clone()).collect()
    } else {
        args.names.clone()
    };
    for name in &names {
        let scenario = file.get(name)?.with_overrides(&overrides)?;
        let out = scenario.run_to(&file.base_dir, &args.out)?;
        println!(
            "{name}: final k = {}, undefined steps = {}, trace length = {} -> {}",
            out.final_k,
            out.undefined_steps,
            out.trace.len(),
            scenario.trace_path(&args.out).display()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate { dataset, seed, out } => generate(*dataset, *seed, out),
        Command::Run(args) => run(args),
        Command::Verify {
            trials,
            seed,
            tolerance,
            sequential,
        } => {
            let exec = if *sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            let report = verify(*trials, *seed, *tolerance, exec);
            println!(
                "{} trials (seeds {seed}..{}), tolerance {tolerance:e}: {} single-cluster, {} with λ = 1, {} with an empty cluster",
                report.trials,
                seed + *trials as u64,
                report.single_cluster_trials,
                report.lambda_one_trials,
                report.empty_cluster_trials
            );
            for kind in IndexKind::ALL {
                match report.max_rel[kind.slot()] {
                    Some(r) => println!("  {:<10} max relative error {r:.3e}", kind.name()),
                    None => println!("  {:<10} not exercised", kind.name()),
                }
            }
            for f in &report.failures {
                println!("  FAIL seed {} {} at step {}: relative error {:e}", f.seed, f.what, f.step, f.rel);
            }
            if report.passed() {
                println!("PASS");
                return ExitCode::SUCCESS;
            }
            println!("FAIL ({} comparisons out of tolerance)", report.failures.len());
            return ExitCode::FAILURE;
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
