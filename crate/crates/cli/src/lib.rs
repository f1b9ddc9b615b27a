//! Command-line driver: dataset preparation, training, evaluation,
//! perturbation sweeps and ablations. Each command prints a JSON summary on
//! stdout and writes its artifacts under `--out`.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sdgcl_core::graph::EdgeFormat;

pub use commands::{
    cmd_ablate, cmd_dump_operator, cmd_eval, cmd_prepare, cmd_sweep, cmd_train, OperatorKind, SplitName, SweepParam,
};
pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Parser, Debug)]
#[command(name = "sdgcl", version, about = "Signed directed graph contrastive learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Split an edge list 60/20/20 and write the split files.
    Prepare(PrepareArgs),
    /// Train one model per seed; writes checkpoints, logs and metrics.
    Train(TrainArgs),
    /// Score a split with a saved checkpoint.
    Eval(EvalArgs),
    /// Train over a list of values of one parameter.
    Sweep(SweepArgs),
    /// Train the six ablation variants.
    Ablate(AblateArgs),
    /// Write a graph operator as `row col re im` lines.
    DumpOperator(DumpArgs),
}

/// Flags shared by every training command. Values given here override the
/// `--config` file. Phases are in multiples of π.
#[derive(Args, Debug, Default, Clone)]
pub struct ConfigArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Edge list file or prepared split directory (repeatable for ablate).
    #[arg(long)]
    pub dataset: Vec<PathBuf>,
    #[arg(long)]
    pub format: Option<EdgeFormat>,
    /// Split seed for raw edge lists (defaults to the run seed).
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Sign flip ratio.
    #[arg(long)]
    pub p: Option<f64>,
    /// Direction flip ratio.
    #[arg(long)]
    pub r: Option<f64>,
    /// Comma separated phase grid, e.g. 0,0.1,0.2,0.3,0.4.
    #[arg(long, value_delimiter = ',')]
    pub q_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub q_base: Option<f64>,
    /// Gaussian phase noise; nonzero switches from the grid to q_base + noise.
    #[arg(long)]
    pub q_noise_std: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Embedding width for the input table, conv layers and output.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub pos_neg_ratio: Option<usize>,
    #[arg(long)]
    pub symmetric_inter_loss: bool,
    #[arg(long)]
    pub freeze_sampling: bool,
    /// Contrast the encoder outputs directly.
    #[arg(long)]
    pub no_projection: bool,
}

impl ConfigArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        match self.dataset.as_slice() {
            [] => {}
            [one] => c.dataset = Some(one.clone()),
            _ => return Err(CliError::Usage("only ablate accepts several --dataset flags".into())),
        }
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { c.$field = v.clone().into(); })*
            };
        }
        set!(format, split_seed);
        set!(
            seed, seeds, threshold, p, r, q_grid, q_base, q_noise_std, alpha, tau, lr, weight_decay, epochs, patience,
            dim, layers, pos_neg_ratio
        );
        c.symmetric_inter_loss |= self.symmetric_inter_loss;
        c.freeze_sampling |= self.freeze_sampling;
        if self.no_projection {
            c.use_projection = false;
        }
        Ok(c)
    }
}

#[derive(Args, Debug)]
pub struct PrepareArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub format: Option<EdgeFormat>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for train/valid/test files.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Run directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: SplitName,
    /// Also write the report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// p, r, pr (both), q_noise_std, alpha or tau.
    #[arg(long)]
    pub sweep: SweepParam,
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DumpArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub format: Option<EdgeFormat>,
    #[arg(long, default_value = "propagation")]
    pub kind: OperatorKind,
    /// Phase in multiples of π.
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes")
}

fn format_of(format: Option<EdgeFormat>, path: &std::path::Path) -> EdgeFormat {
    RunConfig {
        format,
        ..RunConfig::default()
    }
    .format_for(path)
}

/// Runs a parsed command and returns the JSON printed on stdout.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Prepare(a) => {
            let format = format_of(a.format, &a.dataset);
            Ok(json(&cmd_prepare(&a.dataset, format, a.seed, &a.out)?))
        }
        Command::Train(a) => Ok(json(&cmd_train(&a.config.resolve()?, &a.out)?)),
        Command::Eval(a) => {
            let config = a.config.resolve()?;
            Ok(json(&cmd_eval(&config, &a.checkpoint, a.split, a.out.as_deref())?))
        }
        Command::Sweep(a) => Ok(json(&cmd_sweep(&a.config.resolve()?, a.sweep, &a.values, &a.out)?)),
        Command::Ablate(a) => {
            let datasets = a.config.dataset.clone();
            let config = ConfigArgs {
                dataset: Vec::new(),
                ..a.config
            }
            .resolve()?;
            let datasets = if datasets.is_empty() {
                config.dataset.iter().cloned().collect()
            } else {
                datasets
            };
            Ok(json(&cmd_ablate(&config, &datasets, &a.out)?))
        }
        Command::DumpOperator(a) => {
            let format = format_of(a.format, &a.dataset);
            let nnz = cmd_dump_operator(&a.dataset, format, a.kind, a.q, &a.out)?;
            Ok(json(&serde_json::json!({ "nnz": nnz, "out": a.out })))
        }
    }
}
