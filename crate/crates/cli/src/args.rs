//! Command-line arguments.
//!
//! Every experiment command takes `--network`, `--out` and `--seed`. The
//! argument structs also serialize (minus file paths) into the configuration
//! hash recorded in each output file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "packetcode", version, about = "Random linear packet coding experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Subcommand)]
pub enum Command {
    /// Min-cut capacity from the source to each sink.
    Capacity(CapacityArgs),
    /// Replications of the coding scheme with per-replication outcomes.
    Simulate(SimulateArgs),
    /// Decoding success rate across rates and message counts.
    Sweep(SweepArgs),
    /// Decoding error probability over a delay grid, with exponent fit.
    Exponent(ExponentArgs),
    /// Innovative-queue growth along a tandem against the fluid prediction.
    Fluidcheck(FluidcheckArgs),
    /// Writes a bundled network description.
    Fixture(FixtureArgs),
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct Common {
    /// Network description (JSON).
    #[arg(long)]
    #[serde(skip)]
    pub network: PathBuf,
    /// Output CSV file.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct Terminals {
    /// Source node label; defaults to the first listed node.
    #[arg(long)]
    pub source: Option<u32>,
    /// Comma-separated sink labels; default is the last listed node.
    #[arg(long, value_delimiter = ',')]
    pub sinks: Vec<u32>,
}

fn parse_field(s: &str) -> Result<u32, String> {
    match s.parse::<u32>() {
        Ok(q @ (2 | 16 | 256)) => Ok(q),
        _ => Err(format!("field size must be 2, 16 or 256, got {s}")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    /// Solve for the payloads and compare them with the messages.
    Full,
    /// Count a sink as decoded when its coding vectors reach rank K.
    Rank,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub terminals: Terminals,
    /// Also write the unicast flow's path decomposition for each sink.
    #[arg(long)]
    #[serde(skip)]
    pub paths: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub terminals: Terminals,
    /// Number of messages K.
    #[arg(long = "K")]
    pub k: usize,
    /// Payload symbols per packet.
    #[arg(long, default_value_t = 1)]
    pub payload: usize,
    #[arg(long, default_value_t = 256, value_parser = parse_field)]
    pub field: u32,
    #[arg(long, default_value_t = 100)]
    pub reps: u64,
    /// Decoding deadline (block mode) or horizon (rateless mode).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Coding rate R; without --delta the deadline is K / R.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Record the first time each sink reaches rank K instead of decoding
    /// at a deadline.
    #[arg(long)]
    pub rateless: bool,
    /// Keep every received packet at intermediate nodes.
    #[arg(long)]
    pub no_prune: bool,
    #[arg(long, value_enum, default_value_t = DecodeMode::Full)]
    pub decode: DecodeMode,
    /// Write the event log of replication 0 to this file.
    #[arg(long)]
    #[serde(skip)]
    pub events: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub terminals: Terminals,
    /// Comma-separated message counts.
    #[arg(long = "K", value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    /// Comma-separated rates as fractions of the multicast capacity C.
    #[arg(long, value_delimiter = ',', required = true)]
    pub rate: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub payload: usize,
    #[arg(long, default_value_t = 256, value_parser = parse_field)]
    pub field: u32,
    #[arg(long, default_value_t = 100)]
    pub reps: u64,
    #[arg(long, value_enum, default_value_t = DecodeMode::Full)]
    pub decode: DecodeMode,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ExponentArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub terminals: Terminals,
    /// Coding rate R.
    #[arg(long)]
    pub rate: f64,
    /// Comma-separated delay grid.
    #[arg(long, value_delimiter = ',', required = true)]
    pub delta: Vec<f64>,
    #[arg(long, default_value_t = 10000)]
    pub reps: u64,
    #[arg(long, default_value_t = 256, value_parser = parse_field)]
    pub field: u32,
    /// Innovation order for the upper-bound exponent.
    #[arg(long, default_value_t = 8)]
    pub rho: u32,
    /// Importance sampling: scale Poisson injection rates by this factor.
    /// `auto` uses R / C.
    #[arg(long)]
    pub tilt: Option<String>,
    #[arg(long, value_enum, default_value_t = DecodeMode::Full)]
    pub decode: DecodeMode,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct FluidcheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub terminals: Terminals,
    /// Run length τ.
    #[arg(long)]
    pub delta: f64,
    /// Comma-separated sampling times; default τ/2 and τ.
    #[arg(long, value_delimiter = ',')]
    pub times: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub rho: u32,
    #[arg(long, default_value_t = 2, value_parser = parse_field)]
    pub field: u32,
    #[arg(long = "K", default_value_t = 8)]
    pub k: usize,
    #[arg(long, default_value_t = 20)]
    pub reps: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FixtureKind {
    /// Two links with Poisson injections and i.i.d. losses, z = (1, 0.5).
    Tandem2,
    /// An L-link tandem from --z, or from --injection and --eps.
    Tandem,
    /// Three-node Aloha relay with transmit probability --q.
    AlohaRelay,
}

#[derive(Clone, Debug, Args)]
pub struct FixtureArgs {
    #[arg(value_enum)]
    pub kind: FixtureKind,
    #[arg(long)]
    pub out: PathBuf,
    /// Link reception rates of a tandem.
    #[arg(long, value_delimiter = ',')]
    pub z: Vec<f64>,
    /// Poisson injection rate on every tandem link (with --eps).
    #[arg(long)]
    pub injection: Option<f64>,
    /// Per-link i.i.d. loss probabilities of a tandem.
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
}
