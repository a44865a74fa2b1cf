use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use huca_core::config::Ablation;
use huca_core::simenv::Scenario;
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "huca", version, about = "Train and evaluate hierarchical EV charging controllers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a controller, then evaluate it greedily.
    Train(TrainArgs),
    /// Evaluate a checkpoint or a reference policy.
    Eval(EvalArgs),
    /// Train and evaluate the full model and its three ablations under one seed.
    Ablate(CommonArgs),
    /// Plan the price-greedy full-knowledge charging schedule.
    Oracle(CommonArgs),
    /// Write synthetic load and price traces as CSV.
    GenTraces(CommonArgs),
    /// Re-execute the run recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Flat `key = value` configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// certain | uncertain
    #[arg(long)]
    pub scenario: Option<Scenario>,
    #[arg(long)]
    pub piles: Option<usize>,
    #[arg(long)]
    pub episodes: Option<usize>,
    /// full | no-ca | no-high | no-either
    #[arg(long)]
    pub ablation: Option<Ablation>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Output directory; relative paths resolve under $HUCA_RUN_DIR (default `runs`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub load_csv: Option<PathBuf>,
    #[arg(long)]
    pub price_csv: Option<PathBuf>,
    /// Days of synthetic traces when no CSV is given (default 28).
    #[arg(long)]
    pub synthetic_days: Option<usize>,
    /// Evaluation horizon in days.
    #[arg(long)]
    pub eval_days: Option<usize>,
    /// Seed of the evaluation sessions (default: --seed).
    #[arg(long)]
    pub eval_seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Write intermediate checkpoints every N episodes.
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Model,
    Random,
    MaxChargeToTarget,
    MaxCharge,
}

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Checkpoint directory, or a train run directory. Fresh networks when omitted.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PolicyKind::Model)]
    pub policy: PolicyKind,
}

#[derive(Args, Debug, Clone)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
