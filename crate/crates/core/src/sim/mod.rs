//! Continuous-time discrete-event simulation of the coding scheme.
//!
//! One replication owns all of its state and a ChaCha8 generator seeded with
//! `seed ^ replication`; replications run in parallel on the rayon pool and
//! are collected in replication order, so results never depend on the
//! thread count.
//!
//! With innovation tracking enabled a replication runs in two passes. The
//! first simulates the network and logs every reception together with the
//! packet's auxiliary encoding vector; the second replays the log and marks
//! innovative packets path by path. Replay is needed because the rule for
//! one path refers to the end-of-run sets of the other paths.

mod beta;
mod engine;
mod estimate;
mod queue;
mod tracker;

pub use estimate::{estimate_error_probability, is_poisson_driven, multicast_run, ErrorTable};
pub use tracker::{InnovationReport, PathInnovation, Selection, Tracking, Violations};

use rayon::prelude::*;

use crate::capacity::NodeSet;
use crate::error::Result;
use crate::netmodel::Network;

/// A sink and the time at which it attempts to decode.
#[derive(Clone, Debug, PartialEq)]
pub struct Sink {
    pub node: usize,
    /// Decoding deadline `Δ_t`; unused in rateless mode.
    pub deadline: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Mode {
    /// Each sink decodes exactly at its deadline.
    Block,
    /// Sinks record the first time their rank reaches K; the run ends at
    /// `horizon` or when every sink is full rank.
    Rateless { horizon: f64 },
}

/// How a sink decides it has decoded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeCheck {
    /// Solve for the payloads and compare them with the messages.
    Full,
    /// Declare success when the stored encoding vectors have rank K.
    RankOnly,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub network: Network,
    pub source: usize,
    pub sinks: Vec<Sink>,
    pub k: usize,
    /// Payload symbols per packet (λ).
    pub payload_len: usize,
    /// Field size q: 2, 16 or 256.
    pub field_order: u32,
    pub mode: Mode,
    pub seed: u64,
    pub replications: u64,
    /// Whether nodes other than the source and sinks discard packets that
    /// do not extend their span. Innovation tracking needs this off.
    pub intermediate_prune: bool,
    pub tracking: Option<Tracking>,
    pub decode_check: DecodeCheck,
    /// End the run once every sink has rank K.
    pub stop_when_decoded: bool,
    /// Importance sampling: multiply the rate of every Poisson injection
    /// stream by this factor and report the likelihood ratio in
    /// [`SimTrace::log_weight`].
    pub injection_tilt: Option<f64>,
    pub event_log: bool,
}

impl SimConfig {
    /// Block-mode configuration with q = 256, one payload symbol, seed 0 and
    /// a single replication.
    pub fn new(network: Network, source: usize, sinks: Vec<Sink>, k: usize) -> Self {
        Self {
            network,
            source,
            sinks,
            k,
            payload_len: 1,
            field_order: 256,
            mode: Mode::Block,
            seed: 0,
            replications: 1,
            intermediate_prune: true,
            tracking: None,
            decode_check: DecodeCheck::Full,
            stop_when_decoded: false,
            injection_tilt: None,
            event_log: false,
        }
    }
}

/// Counters for one arc or hyperarc. Every injection is skipped (empty
/// memory at the transmitter), lost, or received by a nonempty set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinkStats {
    pub injections: u64,
    pub skipped: u64,
    pub lost: u64,
    pub received: u64,
    /// Receptions broken down by reception set, ascending.
    pub by_set: Vec<(NodeSet, u64)>,
    pub last_reception: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SinkOutcome {
    pub node: usize,
    /// `None` in rateless mode.
    pub deadline: Option<f64>,
    pub decoded: bool,
    /// Rank at the deadline (block) or at the end of the run (rateless).
    pub rank: usize,
    /// Packets delivered to the sink up to that time.
    pub received: u64,
    /// First time the sink's rank reached K.
    pub full_rank_time: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogKind {
    Reception,
    Loss,
    Skip,
    DecodeSuccess,
    DecodeFailure,
}

impl LogKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LogKind::Reception => "reception",
            LogKind::Loss => "loss",
            LogKind::Skip => "skip",
            LogKind::DecodeSuccess => "decode_success",
            LogKind::DecodeFailure => "decode_failure",
        }
    }
}

/// One line of the packet event log.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRecord {
    pub time: f64,
    pub kind: LogKind,
    pub link: Option<usize>,
    /// Receiving node, transmitter of a lost or skipped packet, or sink.
    pub node: usize,
    pub packet: Option<u64>,
    pub rank_after: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimTrace {
    pub replication: u64,
    pub links: Vec<LinkStats>,
    pub sinks: Vec<SinkOutcome>,
    pub final_rank: Vec<usize>,
    pub end_time: f64,
    /// Log likelihood ratio of the run under the untilted injection rates;
    /// zero without importance sampling.
    pub log_weight: f64,
    pub events: Option<Vec<LogRecord>>,
    pub innovation: Option<InnovationReport>,
}

/// Runs replication 0.
pub fn run(config: &SimConfig) -> Result<SimTrace> {
    run_replication(config, 0)
}

pub fn run_replication(config: &SimConfig, replication: u64) -> Result<SimTrace> {
    engine::validate(config)?;
    engine::simulate(config, replication)
}

/// Runs `config.replications` replications in parallel, in replication order.
pub fn run_replications(config: &SimConfig) -> Result<Vec<SimTrace>> {
    engine::validate(config)?;
    (0..config.replications)
        .into_par_iter()
        .map(|r| engine::simulate(config, r))
        .collect()
}
