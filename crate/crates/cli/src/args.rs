use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thinfilm::time::{PicardOptions, Snapshots};

#[derive(Debug, Parser)]
#[command(name = "thinfilm", version, about = "p-Laplace flow in moving thin bands and its curve limit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the band problem at one thickness.
    SolveThin(ThinArgs),
    /// Solve the curve problem.
    SolveLimit(LimitArgs),
    /// Solve both problems, average the band solution and compare.
    Average(ThinArgs),
    /// Run the thickness ladder.
    Converge(ConvergeArgs),
    /// Check analytic curve and band frames against finite differences.
    Validate(ValidateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SolveThin(_) => "solve-thin",
            Command::SolveLimit(_) => "solve-limit",
            Command::Average(_) => "average",
            Command::Converge(_) => "converge",
            Command::Validate(_) => "validate",
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Override the scenario's exponent.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 64)]
    pub n_theta: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[command(flatten)]
    pub picard: PicardArgs,
}

#[derive(Debug, Args)]
pub struct SnapshotArgs {
    /// Keep every N-th time level.
    #[arg(long, conflicts_with = "snapshot_times")]
    pub snapshot_every: Option<usize>,
    /// Keep these times (comma separated, on the time grid).
    #[arg(long, value_delimiter = ',')]
    pub snapshot_times: Option<Vec<f64>>,
}

impl SnapshotArgs {
    pub fn resolve(&self, default_every: usize) -> Snapshots {
        match (&self.snapshot_times, self.snapshot_every) {
            (Some(times), _) => Snapshots::Times(times.clone()),
            (None, Some(n)) => Snapshots::Every(n),
            (None, None) => Snapshots::Every(default_every),
        }
    }
}

#[derive(Debug, Args)]
pub struct PicardArgs {
    #[arg(long, default_value_t = PicardOptions::default().tol)]
    pub picard_tol: f64,
    #[arg(long, default_value_t = PicardOptions::default().max_iter)]
    pub picard_max_iter: usize,
    #[arg(long, default_value_t = PicardOptions::default().damping_after)]
    pub picard_damping_after: usize,
    #[arg(long, default_value_t = PicardOptions::default().damping)]
    pub picard_damping: f64,
}

impl PicardArgs {
    pub fn options(&self) -> PicardOptions {
        PicardOptions {
            tol: self.picard_tol,
            max_iter: self.picard_max_iter,
            damping_after: self.picard_damping_after,
            damping: self.picard_damping,
        }
    }
}

#[derive(Debug, Args)]
pub struct ThinArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub snapshots: SnapshotArgs,
    /// Band thickness.
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 16)]
    pub n_sigma: usize,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub snapshots: SnapshotArgs,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Strictly decreasing thicknesses, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.1,0.05")]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 16)]
    pub n_sigma: usize,
    /// Keep every N-th time level for the error norms.
    #[arg(long, default_value_t = 1)]
    pub snapshot_every: usize,
    /// Also write the averaged trace of every thickness.
    #[arg(long)]
    pub write_traces: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Optional directory for `validation.json` and a manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Thickness used for the band-map checks.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 64)]
    pub samples_theta: usize,
    #[arg(long, default_value_t = 9)]
    pub samples_time: usize,
}
