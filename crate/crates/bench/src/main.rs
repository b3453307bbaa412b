use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use mothcore_bench::experiments::run_eval;
use mothcore_bench::{run_experiment, ExperimentConfig, ExperimentKind, RunRecord};

/// Spiking-network experiments on MNIST and a foraging agent.
///
/// MNIST is read from `data.dir` or $MOTHCORE_DATA_DIR and checked against
/// its SHA-256 digests. Nothing is downloaded.
#[derive(Parser, Debug)]
#[command(name = "mothcore", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compare the discrete state model to an event-driven LIF simulation.
    ValidateLif(Common),
    /// Train a shallow classifier (experiment = "shallow").
    Train(Common),
    /// Evaluate a saved shallow classifier.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Network JSON; overrides `eval.model`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train a mushroom body readout (mb-rate, mb-spiking or prior).
    Mb(Common),
    /// Run the foraging agent.
    Agent(Common),
    /// Parameter sweeps (shallow-sweep or mb-sweep).
    Sweep(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to runs/<experiment>-<seed>-<hash>.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self, allowed: &[ExperimentKind], command: &str) -> anyhow::Result<ExperimentConfig> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config = config.with_seed(seed);
        }
        if !allowed.contains(&config.experiment) {
            let names: Vec<_> = allowed.iter().map(|k| k.name()).collect();
            bail!(
                "`{command}` runs {} experiments, but {} sets experiment = \"{}\"",
                names.join(" or "),
                self.config.display(),
                config.experiment
            );
        }
        Ok(config)
    }

    fn out_dir(&self, record: &RunRecord, suffix: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            Path::new("runs").join(format!("{}{suffix}-{}-{}", record.experiment, record.seed, record.config_hash))
        })
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    use ExperimentKind as K;
    let (common, record, suffix) = match &cli.command {
        Command::ValidateLif(c) => (c, run_experiment(&c.load(&[K::ValidateLif], "validate-lif")?)?, ""),
        Command::Train(c) => (c, run_experiment(&c.load(&[K::Shallow], "train")?)?, ""),
        Command::Eval { common, model } => {
            let mut config = common.load(&[K::Shallow], "eval")?;
            if model.is_some() {
                config.eval.model = model.clone();
            }
            (common, run_eval(&config)?, "-eval")
        }
        Command::Mb(c) => (c, run_experiment(&c.load(&[K::MbRate, K::MbSpiking, K::Prior], "mb")?)?, ""),
        Command::Agent(c) => (c, run_experiment(&c.load(&[K::Agent], "agent")?)?, ""),
        Command::Sweep(c) => (c, run_experiment(&c.load(&[K::ShallowSweep, K::MbSweep], "sweep")?)?, ""),
    };
    let dir = common.out_dir(&record, suffix);
    record.write(&dir).with_context(|| format!("writing results to {}", dir.display()))?;
    println!("{} seed={} config_hash={} runtime={:.1}s", record.experiment, record.seed, record.config_hash, record.runtime_seconds);
    for (k, v) in &record.metrics {
        println!("  {k} = {v}");
    }
    println!("results in {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
