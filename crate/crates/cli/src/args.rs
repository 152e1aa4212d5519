//! Flag definitions and config-file merging. Every flag may also be given as
//! a key of the same name in a TOML file passed with `--config`; flags on the
//! command line win.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "mvot", version, about = "Multiple visual object tracking")]
pub struct Cli {
    /// TOML file supplying default values for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track the targets of the first frame through a frame directory.
    Track(TrackArgs),
    /// Run the real-time protocol against ground truth and write reports.
    Eval(EvalArgs),
    /// Write a synthetic sequence (frames and ground truth).
    Synth(SynthArgs),
    /// Write a seeded weights file.
    InitWeights(InitWeightsArgs),
    /// Time the shared and per-target stages for several target counts.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    Shape,
    Distractor,
    Erosion,
    Spatial,
}

/// Network source and scoring knobs shared by the commands that track.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct TrackerFlags {
    /// Weights file written by `init-weights`.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<PathBuf>,
    /// Score by normalized correlation and keep the previous size. Without
    /// --weights the network is initialized from --seed.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub correlation_only: bool,
    /// Score-map refinement stage to skip; repeatable or comma-separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub disable_penalty: Vec<Penalty>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_influence: Option<f64>,
    /// Confidence below which the motion prediction is reported.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct TrackArgs {
    /// Directory of `.ppm` frames, processed in name order.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frames: Option<PathBuf>,
    /// MOT-style file whose frame-1 rows are the initial boxes.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<PathBuf>,
    /// Results file.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub tracker: TrackerFlags,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct EvalArgs {
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frames: Option<PathBuf>,
    /// MOT-style ground truth.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gt: Option<PathBuf>,
    /// Report directory.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Comma-separated frame-rate budgets, one report each [default: 20,25].
    #[arg(long, value_name = "LIST")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fps_budget: Option<String>,
    /// Charge a fixed latency per frame instead of the measured one.
    #[arg(long, value_name = "MS")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latency_inject_ms: Option<f64>,
    /// Replay the ground truth instead of tracking (harness self-test).
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub oracle: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub tracker: TrackerFlags,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SynthArgs {
    /// Output directory; receives `frames/` and `gt.txt`.
    #[arg(long, value_name = "DIR")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Number of objects [default: 4].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objects: Option<usize>,
    /// Number of frames [default: 60].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    /// Frame width [default: 640].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    /// Frame height [default: 480].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct InitWeightsArgs {
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Train the motion predictor on synthetic trajectories before writing.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub train_inertia: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct BenchArgs {
    /// Comma-separated target counts [default: 1,8,32].
    #[arg(long, value_name = "LIST")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub targets: Option<String>,
    /// Frame width [default: 640].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    /// Frame height [default: 480].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    /// Timed frames per target count [default: 3].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
    /// Also write the table as comma-separated values.
    #[arg(long, value_name = "FILE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub tracker: TrackerFlags,
}

/// Overlays the flags given on the command line onto the config file.
/// Keys the command does not know are ignored so one file can serve all
/// commands.
pub fn merge_with_file<T: Clone + Serialize + DeserializeOwned>(
    cli: &T,
    file: Option<&Path>,
) -> anyhow::Result<T> {
    let Some(path) = file else {
        return Ok(cli.clone());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
    let mut table: toml::Table =
        toml::from_str(&text).map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))?;
    for (k, v) in toml::Table::try_from(cli)? {
        table.insert(k, v);
    }
    table
        .try_into()
        .map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))
}

/// Parses a non-empty comma-separated list.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, String> {
    let items: Result<Vec<T>, _> = text.split(',').map(|s| s.trim().parse()).collect();
    match items {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(format!("invalid {what} list {text:?}")),
    }
}
