//! `alq`: run active-learning simulations from the command line.
//!
//! Exit codes: 0 on success, 1 when a run fails, 2 for usage or
//! configuration errors.

mod output;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alq_core::datagen::{generate_dataset, write_dataset_csv};
use alq_core::simulation::{aggregate, run_rounds, ExperimentSummary, RoundResult, SimulationConfig, DEFAULT_PHI_DELTA};
use alq_core::strategies::{DEFAULT_CONCENTRATION, DEFAULT_MODE};
use alq_core::{CostModel, DatasetConfig, PerformanceMeasure, QueryStrategy};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Parser)]
#[command(name = "alq", version, about = "Pool-based active learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment for one query strategy.
    Run {
        #[arg(long, value_enum, default_value_t = StrategyArg::ShiftedNormal)]
        strategy: StrategyArg,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run all three strategies on paired seeds and tabulate the final query.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write one generated dataset as CSV.
    DumpDataset {
        #[arg(long, default_value_t = 0.5)]
        class_sep: f64,
        #[arg(long, default_value_t = 0.0)]
        flip_y: f64,
        #[arg(long, env = "ALQ_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Random,
    Uncertainty,
    ShiftedNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LambdaArg {
    Auc,
    F1,
    AucF1Mean,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Per-coordinate centroid offset; smaller means more class overlap.
    #[arg(long, default_value_t = 0.5)]
    class_sep: f64,
    /// Label-flip noise rate.
    #[arg(long, default_value_t = 0.0)]
    flip_y: f64,
    #[arg(long, default_value_t = 20)]
    queries: usize,
    /// Instances labeled per query.
    #[arg(long, default_value_t = 2)]
    batch: usize,
    #[arg(long, default_value_t = 30)]
    rounds: usize,
    /// Cost of one positive label relative to one negative label.
    #[arg(long, default_value_t = 1.0)]
    cost_c: f64,
    #[arg(long, env = "ALQ_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Mode of the shifted-normal target distribution.
    #[arg(long, default_value_t = DEFAULT_MODE)]
    mode: f64,
    /// Concentration (alpha + beta) of the shifted-normal target distribution.
    #[arg(long, default_value_t = DEFAULT_CONCENTRATION)]
    concentration: f64,
    /// Reuse one dataset, generated from --seed, in every round.
    #[arg(long)]
    shared_dataset: bool,
    /// Record the uncertainty-band diagnostic and write phi.csv.
    #[arg(long)]
    phi: bool,
    #[arg(long, default_value_t = DEFAULT_PHI_DELTA)]
    phi_delta: f64,
    /// Performance measure used as lambda in the cost efficiency.
    #[arg(long, value_enum, default_value_t = LambdaArg::Auc)]
    lambda_metric: LambdaArg,
    /// Maximum number of rounds run concurrently.
    #[arg(long)]
    jobs: Option<usize>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl CommonArgs {
    fn config(&self, strategy: StrategyArg) -> SimulationConfig {
        let strategy = match strategy {
            StrategyArg::Random => QueryStrategy::Random,
            StrategyArg::Uncertainty => QueryStrategy::Uncertainty,
            StrategyArg::ShiftedNormal => QueryStrategy::ShiftedNormal {
                mode: self.mode,
                concentration: self.concentration,
            },
        };
        SimulationConfig {
            dataset: DatasetConfig {
                class_sep: self.class_sep,
                flip_y: self.flip_y,
                seed: self.seed,
                ..DatasetConfig::default()
            },
            strategy,
            n_queries: self.queries,
            batch_size: self.batch,
            cost: CostModel { c: self.cost_c },
            rounds: self.rounds,
            base_seed: self.seed,
            shared_dataset: self.shared_dataset,
            phi_delta: self.phi.then_some(self.phi_delta),
            performance: match self.lambda_metric {
                LambdaArg::Auc => PerformanceMeasure::Auc,
                LambdaArg::F1 => PerformanceMeasure::F1,
                LambdaArg::AucF1Mean => PerformanceMeasure::AucF1Mean,
            },
            ..SimulationConfig::default()
        }
    }
}

fn thread_pool(jobs: Option<usize>) -> Result<Option<rayon::ThreadPool>, Failure> {
    match jobs {
        None => Ok(None),
        Some(0) => Err(Failure::Usage("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(Some)
            .map_err(|e| Failure::Runtime(format!("cannot start worker threads: {e}"))),
    }
}

fn execute(config: &SimulationConfig, pool: Option<&rayon::ThreadPool>) -> Result<(ExperimentSummary, Vec<RoundResult>), Failure> {
    let rounds = match pool {
        Some(pool) => pool.install(|| run_rounds(config)),
        None => run_rounds(config),
    }
    .map_err(|e| Failure::Runtime(e.to_string()))?;
    let summary = aggregate(config, &rounds).map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok((summary, rounds))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", path.display())))
}

fn write_outputs(out: &Path, summaries: &[ExperimentSummary], rounds: &[(String, Vec<RoundResult>)], json: String) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", out.display())))?;
    let io = |what: &str, e: &dyn std::fmt::Display| Failure::Runtime(format!("writing {what}: {e}"));

    output::write_per_query_csv(summaries, create(&out.join("per_query.csv"))?)
        .map_err(|e| io("per_query.csv", &e))?;
    fs::write(out.join("summary.json"), json + "\n").map_err(|e| io("summary.json", &e))?;

    if summaries.iter().any(|s| s.config.phi_delta.is_some()) {
        let path = out.join("phi.csv");
        let mut buf = Vec::new();
        for (i, (strategy, rs)) in rounds.iter().enumerate() {
            let mut part = Vec::new();
            output::write_phi_csv(strategy, rs, &mut part).map_err(|e| io("phi.csv", &e))?;
            // Keep only the first header.
            let skip = if i == 0 { 0 } else { part.iter().position(|&b| b == b'\n').map_or(0, |p| p + 1) };
            buf.extend_from_slice(&part[skip..]);
        }
        fs::write(&path, buf).map_err(|e| io("phi.csv", &e))?;
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(format!("serializing summary: {e}")))
}

fn cmd_run(strategy: StrategyArg, common: &CommonArgs) -> Result<(), Failure> {
    let config = common.config(strategy);
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let pool = thread_pool(common.jobs)?;
    let (summary, rounds) = execute(&config, pool.as_ref())?;
    let json = to_json(&summary)?;
    write_outputs(&common.out, std::slice::from_ref(&summary), &[(summary.strategy.clone(), rounds)], json)?;
    print!("{}", output::final_query_table(std::slice::from_ref(&summary)));
    Ok(())
}

fn cmd_compare(common: &CommonArgs) -> Result<(), Failure> {
    let strategies = [StrategyArg::Random, StrategyArg::Uncertainty, StrategyArg::ShiftedNormal];
    let configs: Vec<SimulationConfig> = strategies.iter().map(|&s| common.config(s)).collect();
    for config in &configs {
        config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let pool = thread_pool(common.jobs)?;

    let mut summaries = Vec::with_capacity(configs.len());
    let mut all_rounds = Vec::with_capacity(configs.len());
    for config in &configs {
        let (summary, rounds) = execute(config, pool.as_ref())?;
        all_rounds.push((summary.strategy.clone(), rounds));
        summaries.push(summary);
    }

    let table = output::final_query_table(&summaries);
    let json = to_json(&summaries)?;
    write_outputs(&common.out, &summaries, &all_rounds, json)?;
    fs::write(common.out.join("final_table.txt"), &table)
        .map_err(|e| Failure::Runtime(format!("writing final_table.txt: {e}")))?;
    print!("{table}");
    Ok(())
}

fn cmd_dump_dataset(class_sep: f64, flip_y: f64, seed: u64, out: &Path) -> Result<(), Failure> {
    let config = DatasetConfig {
        class_sep,
        flip_y,
        seed,
        ..DatasetConfig::default()
    };
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let data = generate_dataset(&config, &mut ChaCha8Rng::seed_from_u64(seed))
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    fs::create_dir_all(out).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", out.display())))?;
    write_dataset_csv(&data, create(&out.join("dataset.csv"))?).map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { strategy, common } => cmd_run(*strategy, common),
        Command::Compare { common } => cmd_compare(common),
        Command::DumpDataset {
            class_sep,
            flip_y,
            seed,
            out,
        } => cmd_dump_dataset(*class_sep, *flip_y, *seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
