//! Config-driven experiment runner behind the `ballbasis` binary.

mod config;
mod run;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{
    BasisSpec, DominateConfig, EstimateConfig, ExperimentConfig, LernerConfig, MeanOscConfig, NamedOperator,
    SparsifyConfig, Suite, SuiteConfig, WeightSpec,
};
pub use run::{Check, Runner, Stage};

use crate::error::Error;

pub const SEED_ENV: &str = "BALLBASIS_SEED";

#[derive(Debug, Parser)]
#[command(name = "ballbasis", version, about = "Sparse domination experiments on finite ball-bases")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// Experiment config; repeat to run several.
    #[arg(long = "config", required = true)]
    pub configs: Vec<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output root; each config writes to `<out>/<name>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run only the verify suite with this name.
    #[arg(long)]
    pub suite: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Audit the ball-basis axioms.
    CheckBasis(RunArgs),
    /// Estimate the bounded-oscillation constants of every operator.
    Estimate(RunArgs),
    /// Build sparse trees over the configured exceptional sets.
    Sparsify(RunArgs),
    /// Sparse domination pipelines with pointwise verification.
    Dominate(RunArgs),
    /// Run the verify suites.
    Verify(RunArgs),
    /// Every stage in order.
    All(RunArgs),
}

impl Command {
    fn parts(&self) -> (&RunArgs, Vec<Stage>) {
        match self {
            Command::CheckBasis(a) => (a, vec![Stage::CheckBasis]),
            Command::Estimate(a) => (a, vec![Stage::Estimate]),
            Command::Sparsify(a) => (a, vec![Stage::Sparsify]),
            Command::Dominate(a) => (a, vec![Stage::Dominate]),
            Command::Verify(a) => (a, vec![Stage::Verify]),
            Command::All(a) => (a, Stage::ALL.to_vec()),
        }
    }
}

/// Flag, then config, then the environment, then 0.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64, Error> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn run_one(path: &Path, args: &RunArgs, stages: &[Stage]) -> Result<Runner, Error> {
    let cfg = ExperimentConfig::load(path)?;
    let seed = resolve_seed(args.seed, cfg.seed)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let out_root = args
        .out
        .clone()
        .or_else(|| cfg.output.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let dir = out_root.join(&cfg.name);
    let mut runner = Runner::new(cfg, seed, base, args.suite.clone())?;
    runner.run(stages);
    runner.write(&dir)?;
    Ok(runner)
}

/// Exit code 0 when every check passes, 1 on a failed check, 2 on a
/// configuration or IO error.
pub fn execute(cli: Cli) -> i32 {
    let (args, stages) = cli.command.parts();
    if let Some(t) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure {t} threads: {e}");
            return 2;
        }
    }
    let mut failed = Vec::new();
    for path in &args.configs {
        match run_one(path, args, &stages) {
            Ok(runner) => {
                print!("{}", runner.summary_text());
                failed.extend(
                    runner
                        .checks
                        .iter()
                        .filter(|c| !c.pass)
                        .map(|c| format!("{}: {}", runner.config.name, c.name)),
                );
            }
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        }
    }
    if failed.is_empty() {
        0
    } else {
        for f in &failed {
            eprintln!("failed check: {f}");
        }
        1
    }
}
