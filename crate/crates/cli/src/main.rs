use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use entperc::{LatticeKind, LatticeSpec};
use entperc_cli::commands::{dist_stats, pdl, percolate, qswap};
use entperc_cli::config::{ExperimentConfig, ModeName};
use entperc_cli::output::Artifacts;

#[derive(Parser)]
#[command(name = "entperc", version, about = "Random entanglement percolation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Trials (percolation) or Monte Carlo samples (pdl).
    #[arg(long)]
    trials: Option<u64>,
    /// Output directory [default: out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Clone)]
struct LatticeArgs {
    #[arg(long, value_parser = parse_kind)]
    lattice: Option<LatticeKind>,
    #[arg(long)]
    size: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Order statistics of SCP distributions.
    DistStats {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        reproduce_table1: bool,
    },
    /// PDL and induced SCP densities, mean SCPs.
    Pdl {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        reproduce_fig1: bool,
    },
    /// Spanning probabilities, sweeps and thresholds.
    Percolate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, value_enum)]
        mode: Option<ModeName>,
        /// Compare several SCP shapes at equal mean.
        #[arg(long)]
        compare_shapes: bool,
        /// Bisect for the spanning threshold.
        #[arg(long)]
        threshold: bool,
        /// Family mean for a single estimate.
        #[arg(long)]
        mean: Option<f64>,
    },
    /// Post-swap SCP penalty on the double-bond honeycomb.
    QswapPenalty {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        size: Option<usize>,
    },
}

fn parse_kind(s: &str) -> Result<LatticeKind, String> {
    s.parse().map_err(|e: entperc::Error| e.to_string())
}

fn load(common: &Common, experiment: &str) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment.get_or_insert_with(|| experiment.to_string());
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.trials.is_some() {
        cfg.trials = common.trials;
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    Ok(cfg)
}

fn workers(common: &Common) -> usize {
    common.workers.unwrap_or_else(rayon::current_num_threads).max(1)
}

fn run(cli: Cli) -> Result<Artifacts> {
    match cli.command {
        Command::DistStats { common, reproduce_table1 } => {
            dist_stats::run(&load(&common, "dist-stats")?, reproduce_table1)
        }
        Command::Pdl { common, reproduce_fig1 } => {
            Ok(pdl::run(&load(&common, "pdl")?, reproduce_fig1)?.0)
        }
        Command::Percolate { common, lattice, mode, compare_shapes, threshold, mean } => {
            let mut cfg = load(&common, "percolate")?;
            if lattice.lattice.is_some() || lattice.size.is_some() {
                let mut spec = cfg.lattice.unwrap_or_else(percolate::default_lattice);
                if let Some(kind) = lattice.lattice {
                    spec = LatticeSpec { kind, ..spec };
                }
                if let Some(size) = lattice.size {
                    spec.size = size;
                }
                cfg.lattice = Some(spec);
            }
            if mode.is_some() {
                cfg.mode = mode;
            }
            cfg.compare_shapes |= compare_shapes;
            cfg.threshold |= threshold;
            if mean.is_some() {
                cfg.mean = mean;
            }
            percolate::run(&cfg, workers(&common))
        }
        Command::QswapPenalty { common, size } => {
            let mut cfg = load(&common, "qswap-penalty")?;
            if let Some(size) = size {
                let spec = cfg
                    .lattice
                    .unwrap_or_else(|| LatticeSpec::new(LatticeKind::Honeycomb, size));
                cfg.lattice = Some(LatticeSpec { size, ..spec });
            }
            Ok(qswap::run(&cfg, workers(&common))?.0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(artifacts) => {
            for path in artifacts.written() {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
