use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fcmrisk_core::pipeline::EngineConfig;
use fcmrisk_core::TNorm;

#[derive(Debug, Parser)]
#[command(
    name = "fcmrisk",
    version,
    about = "Systemic risk evaluation on hierarchical fuzzy cognitive maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a hierarchy (and expert files) for schema errors and unconnected nodes
    Validate(ValidateArgs),
    /// Merge expert files into one matrix, optionally blended with a previous round
    Merge(MergeArgs),
    /// Evaluate node and systemic risk and print the per-level report
    Evaluate(RunArgs),
    /// Recompute under replaced node values or edge weights
    Whatif(WhatIfArgs),
    /// Systemic risk for horizons 1..=k
    Forecast(RunArgs),
    /// Degrees, centrality, vulnerability and receiver/transmitter classes
    Analyze(AnalyzeArgs),
    /// Write the machine-readable result document
    Export(RunArgs),
    /// Serve evaluation rounds over HTTP
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Machine,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Hierarchy document (JSON); may also carry node values and edges
    #[arg(long, value_name = "PATH", required_unless_present = "dataset")]
    pub hierarchy: Option<PathBuf>,
    /// Use a bundled example map instead of --hierarchy
    #[arg(long, value_name = "NAME", conflicts_with = "hierarchy")]
    pub dataset: Option<String>,
    /// Expert evaluation files (.json, or .csv with src,dst,weight,confidence)
    #[arg(long, value_name = "PATH", num_args = 1..)]
    pub experts: Vec<PathBuf>,
    /// Merged matrix of the previous round (output of `merge`)
    #[arg(long, value_name = "PATH")]
    pub prev: Option<PathBuf>,
    /// Complete weight matrix as CSV, node values on the diagonal
    #[arg(long, value_name = "PATH", conflicts_with_all = ["experts", "prev"])]
    pub matrix: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct EngineArgs {
    /// Maximum path length (horizon)
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u16).range(1..))]
    pub k: u16,
    /// How edge weights combine along a path
    #[arg(long, default_value = "product")]
    pub tnorm: TNorm,
    /// Weight of the fresh round when blending with --prev
    #[arg(long, default_value_t = fcmrisk_core::elicitation::DEFAULT_SMOOTHING)]
    pub lambda: f64,
}

impl EngineArgs {
    pub fn config(&self) -> EngineConfig {
        EngineConfig {
            horizon: self.k as usize,
            tnorm: self.tnorm,
            smoothing: self.lambda,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write output to this file instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Decimals shown in text output
    #[arg(long, default_value_t = 2)]
    pub precision: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MergeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Weight of the fresh round when blending with --prev
    #[arg(long, default_value_t = fcmrisk_core::elicitation::DEFAULT_SMOOTHING)]
    pub lambda: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct WhatIfArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Replacement: NODE=VALUE or SRC->DST=WEIGHT (repeatable)
    #[arg(long = "set", value_name = "OVERRIDE")]
    pub set: Vec<String>,
    /// JSON file with a list of overrides
    #[arg(long, value_name = "PATH")]
    pub overrides: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Rank only within this hierarchy level
    #[arg(long)]
    pub level: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    /// Hierarchy document defining the node universe
    #[arg(long, value_name = "PATH", required_unless_present = "dataset")]
    pub hierarchy: Option<PathBuf>,
    /// Use a bundled example map's hierarchy instead of --hierarchy
    #[arg(long, value_name = "NAME", conflicts_with = "hierarchy")]
    pub dataset: Option<String>,
    /// Directory for the append-only round store; in-memory when omitted
    #[arg(long, value_name = "PATH")]
    pub data_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[command(flatten)]
    pub engine: EngineArgs,
}
