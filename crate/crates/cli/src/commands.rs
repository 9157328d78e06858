//! The experiment commands. Each builds a [`Report`] without touching the
//! output files, so tests can inspect tables directly.

use std::path::PathBuf;

use packetcode::analysis::{
    fit_empirical_exponent, fluid_queue_rates, poisson_tail_lower_bound, wilson_interval,
    ExponentCurve, Z95,
};
use packetcode::capacity::{
    decompose_paths, max_flow_wireless, max_flow_wireline, multicast_region, remove_cycles, Cut,
};
use packetcode::netmodel::Network;
use packetcode::sim::{
    estimate_error_probability, multicast_run, run_replication, run_replications, DecodeCheck,
    Mode, SimConfig, Sink, Tracking,
};
use packetcode::Error;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::args::{
    CapacityArgs, Command, Common, DecodeMode, ExponentArgs, FluidcheckArgs, SimulateArgs,
    SweepArgs, Terminals,
};
use crate::config::parse_network;
use crate::table::{ResultsTable, Value};
use crate::CliError;

/// The outcome of a command: its main table, any side files, warnings for
/// stderr, and whether the exponent fit failed.
#[derive(Clone, Debug)]
pub struct Report {
    pub table: ResultsTable,
    pub extra: Vec<(PathBuf, String)>,
    pub warnings: Vec<String>,
    pub no_fit: Option<String>,
}

impl Report {
    fn new(table: ResultsTable) -> Self {
        Self {
            table,
            extra: Vec::new(),
            warnings: Vec::new(),
            no_fit: None,
        }
    }
}

/// Runs an experiment command. Fixture generation is handled by
/// [`crate::execute`].
pub fn run(command: &Command) -> Result<Report, CliError> {
    match command {
        Command::Capacity(a) => capacity(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Exponent(a) => exponent(a),
        Command::Fluidcheck(a) => fluidcheck(a),
        Command::Fixture(_) => Err(CliError::Config("fixture writes a network file, not a table".into())),
    }
}

struct Loaded {
    text: String,
    network: Network,
}

fn load(common: &Common) -> Result<Loaded, CliError> {
    let network = parse_network(&common.network)?;
    let text = std::fs::read_to_string(&common.network)
        .map_err(|e| CliError::Config(format!("{}: {e}", common.network.display())))?;
    Ok(Loaded { text, network })
}

/// Standard metadata: tool version, command, configuration hash, seed. The
/// hash covers the command-line parameters (not file paths) and the network
/// file contents.
fn table_for<A: Serialize>(
    command: &str,
    args: &A,
    loaded: &Loaded,
    seed: u64,
    columns: &[&str],
) -> ResultsTable {
    let mut hasher = Sha256::new();
    hasher.update(command.as_bytes());
    hasher.update([0]);
    hasher.update(serde_json::to_vec(args).expect("arguments serialize"));
    hasher.update([0]);
    hasher.update(loaded.text.as_bytes());
    let mut t = ResultsTable::new(columns);
    t.set_meta("tool", format!("packetcode {}", env!("CARGO_PKG_VERSION")));
    t.set_meta("command", command);
    t.set_meta("config_sha256", hex::encode(hasher.finalize()));
    t.set_meta("seed", seed);
    t
}

fn label(net: &Network, i: usize) -> u32 {
    net.labels()[i]
}

fn labels_joined(net: &Network, nodes: impl IntoIterator<Item = usize>) -> String {
    nodes
        .into_iter()
        .map(|i| label(net, i).to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn resolve(net: &Network, t: &Terminals) -> Result<(usize, Vec<usize>), CliError> {
    let index = |l: u32, flag: &str| {
        net.node_index(l)
            .ok_or_else(|| CliError::Config(format!("{flag}: node {l} is not in the network")))
    };
    let source = match t.source {
        Some(l) => index(l, "--source")?,
        None => 0,
    };
    let mut sinks = Vec::new();
    if t.sinks.is_empty() {
        sinks.push(net.node_count() - 1);
    }
    for &l in &t.sinks {
        let j = index(l, "--sinks")?;
        if sinks.contains(&j) {
            return Err(CliError::Config(format!("--sinks: node {l} listed twice")));
        }
        sinks.push(j);
    }
    if sinks.contains(&source) {
        return Err(CliError::Config(format!(
            "node {} cannot be both the source and a sink",
            label(net, source)
        )));
    }
    Ok((source, sinks))
}

fn min_cuts(net: &Network, s: usize, sinks: &[usize]) -> Result<Vec<(usize, Cut<f64>)>, CliError> {
    Ok(match net {
        Network::Wireline(w) => multicast_region(&w.rate_graph(), s, sinks)?,
        Network::Wireless(w) => multicast_region(&w.rate_hypergraph(), s, sinks)?,
    })
}

/// Multicast capacity: the smallest min-cut over the sinks.
fn multicast_capacity(net: &Network, s: usize, sinks: &[usize]) -> Result<f64, CliError> {
    let c = min_cuts(net, s, sinks)?
        .iter()
        .map(|(_, cut)| cut.value)
        .fold(f64::INFINITY, f64::min);
    if c > 0.0 {
        Ok(c)
    } else {
        Err(CliError::Config("some sink is unreachable from the source (capacity 0)".into()))
    }
}

fn decode_check(mode: DecodeMode) -> DecodeCheck {
    match mode {
        DecodeMode::Full => DecodeCheck::Full,
        DecodeMode::Rank => DecodeCheck::RankOnly,
    }
}

fn positive(x: f64, flag: &str) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Config(format!("{flag} must be positive and finite, got {x}")))
    }
}

pub fn capacity(a: &CapacityArgs) -> Result<Report, CliError> {
    let loaded = load(&a.common)?;
    let net = &loaded.network;
    let (s, sinks) = resolve(net, &a.terminals)?;
    let mut table = table_for("capacity", a, &loaded, a.common.seed, &["sink", "min_cut", "cut_set"]);
    table.set_meta("source", label(net, s));
    let cuts = min_cuts(net, s, &sinks)?;
    let mut warnings = Vec::new();
    let mut multicast = f64::INFINITY;
    for (t, cut) in &cuts {
        if cut.value <= 0.0 {
            warnings.push(format!("sink {} is unreachable from the source", label(net, *t)));
        }
        multicast = multicast.min(cut.value);
        table.push(vec![
            label(net, *t).into(),
            cut.value.into(),
            labels_joined(net, cut.members.iter().copied()).into(),
        ]);
    }
    table.set_meta("multicast_capacity", crate::table::format_float(multicast));
    let mut report = Report::new(table);
    report.warnings = warnings;
    if let Some(path) = &a.paths {
        let mut paths = table_for(
            "capacity-paths",
            a,
            &loaded,
            a.common.seed,
            &["sink", "path", "rate", "nodes", "links"],
        );
        for &t in &sinks {
            let decomposition = match net {
                Network::Wireline(w) => decompose_paths(&remove_cycles(&max_flow_wireline(
                    &w.rate_graph(),
                    s,
                    t,
                    None,
                )))?,
                Network::Wireless(w) => {
                    let h = w.rate_hypergraph();
                    decompose_paths(&max_flow_wireless(&h, s, t)?.to_arc_flow(&h))?
                }
            };
            for (m, p) in decomposition.paths.iter().enumerate() {
                paths.push(vec![
                    label(net, t).into(),
                    m.into(),
                    p.rate.into(),
                    labels_joined(net, p.nodes.iter().copied()).into(),
                    p.links
                        .iter()
                        .map(|l| l.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                        .into(),
                ]);
            }
        }
        report.extra.push((path.clone(), paths.to_csv()));
    }
    Ok(report)
}

pub fn simulate(a: &SimulateArgs) -> Result<Report, CliError> {
    let loaded = load(&a.common)?;
    let net = &loaded.network;
    let (s, sinks) = resolve(net, &a.terminals)?;
    let delta = match (a.delta, a.rate) {
        (Some(d), _) => positive(d, "--delta")?,
        (None, Some(r)) => a.k as f64 / positive(r, "--rate")?,
        (None, None) => return Err(CliError::Config("give --delta or --rate".into())),
    };
    let mut cfg = SimConfig::new(
        net.clone(),
        s,
        sinks.iter().map(|&node| Sink { node, deadline: delta }).collect(),
        a.k,
    );
    cfg.payload_len = a.payload;
    cfg.field_order = a.field;
    cfg.seed = a.common.seed;
    cfg.replications = a.reps;
    cfg.intermediate_prune = !a.no_prune;
    cfg.decode_check = decode_check(a.decode);
    if a.rateless {
        cfg.mode = Mode::Rateless { horizon: delta };
    }
    let traces = run_replications(&cfg)?;
    let mut table = table_for(
        "simulate",
        a,
        &loaded,
        a.common.seed,
        &["replication", "sink", "decoded", "rank", "received", "full_rank_time", "end_time"],
    );
    table.set_meta("mode", if a.rateless { "rateless" } else { "block" });
    table.set_meta("delta", crate::table::format_float(delta));
    let mut all = 0u64;
    let mut per_sink = vec![0u64; sinks.len()];
    for t in &traces {
        if t.sinks.iter().all(|o| o.decoded) {
            all += 1;
        }
        for (i, o) in t.sinks.iter().enumerate() {
            per_sink[i] += o.decoded as u64;
            table.push(vec![
                t.replication.into(),
                label(net, o.node).into(),
                o.decoded.into(),
                o.rank.into(),
                o.received.into(),
                o.full_rank_time.into(),
                t.end_time.into(),
            ]);
        }
    }
    let reps = a.reps.max(1) as f64;
    table.set_meta("success_rate", crate::table::format_float(all as f64 / reps));
    for (i, &t) in sinks.iter().enumerate() {
        table.set_meta(
            &format!("success_rate_sink_{}", label(net, t)),
            crate::table::format_float(per_sink[i] as f64 / reps),
        );
    }
    let mut report = Report::new(table);
    if let Some(path) = &a.events {
        let mut logged = cfg.clone();
        logged.event_log = true;
        let trace = run_replication(&logged, 0)?;
        let mut events = ResultsTable::new(&["time", "kind", "link", "node", "packet", "rank_after"]);
        for e in trace.events.unwrap_or_default() {
            events.push(vec![
                e.time.into(),
                e.kind.as_str().into(),
                e.link.map_or(Value::Missing, Value::from),
                label(net, e.node).into(),
                e.packet.map_or(Value::Missing, Value::from),
                e.rank_after.into(),
            ]);
        }
        report.extra.push((path.clone(), events.to_csv()));
    }
    Ok(report)
}

pub fn sweep(a: &SweepArgs) -> Result<Report, CliError> {
    let loaded = load(&a.common)?;
    let net = &loaded.network;
    let (s, sinks) = resolve(net, &a.terminals)?;
    let c = multicast_capacity(net, s, &sinks)?;
    let mut table = table_for(
        "sweep",
        a,
        &loaded,
        a.common.seed,
        &[
            "k",
            "rate_fraction",
            "rate",
            "delta",
            "successes",
            "replications",
            "success_rate",
            "ci_lower",
            "ci_upper",
        ],
    );
    table.set_meta("capacity", crate::table::format_float(c));
    if a.reps == 0 {
        return Err(CliError::Config("--reps must be at least 1".into()));
    }
    for &k in &a.k {
        if k == 0 {
            return Err(CliError::Config("--K values must be positive".into()));
        }
        for &f in &a.rate {
            let rate = positive(f, "--rate")? * c;
            let delta = k as f64 / rate;
            let mut cfg = SimConfig::new(
                net.clone(),
                s,
                sinks.iter().map(|&node| Sink { node, deadline: delta }).collect(),
                k,
            );
            cfg.payload_len = a.payload;
            cfg.field_order = a.field;
            cfg.seed = a.common.seed;
            cfg.replications = a.reps;
            cfg.decode_check = decode_check(a.decode);
            cfg.stop_when_decoded = true;
            let successes = multicast_run(&cfg)?
                .iter()
                .filter(|o| o.iter().all(|x| x.decoded))
                .count() as u64;
            let (lo, hi) = wilson_interval::<f64>(successes, a.reps, Z95);
            table.push(vec![
                k.into(),
                f.into(),
                rate.into(),
                delta.into(),
                successes.into(),
                a.reps.into(),
                (successes as f64 / a.reps as f64).into(),
                lo.into(),
                hi.into(),
            ]);
        }
    }
    Ok(Report::new(table))
}

pub fn exponent(a: &ExponentArgs) -> Result<Report, CliError> {
    let loaded = load(&a.common)?;
    let net = &loaded.network;
    let (s, sinks) = resolve(net, &a.terminals)?;
    let c = multicast_capacity(net, s, &sinks)?;
    let rate = positive(a.rate, "--rate")?;
    let tilt = match a.tilt.as_deref() {
        None | Some("none") => None,
        Some("auto") => Some(rate / c),
        Some(x) => Some(positive(
            x.parse()
                .map_err(|_| CliError::Config(format!("--tilt: expected a number, none or auto, got {x}")))?,
            "--tilt",
        )?),
    };
    let mut cfg = SimConfig::new(
        net.clone(),
        s,
        sinks.iter().map(|&node| Sink { node, deadline: 1.0 }).collect(),
        1,
    );
    cfg.field_order = a.field;
    cfg.seed = a.common.seed;
    cfg.decode_check = decode_check(a.decode);
    cfg.injection_tilt = tilt;
    let estimates = estimate_error_probability(&cfg, rate, &a.delta, a.reps)?;
    let mut warnings = Vec::new();
    let curve = match ExponentCurve::<f64>::new(c, rate, a.field, a.rho) {
        Ok(curve) => Some(curve),
        Err(e) => {
            warnings.push(format!("no analytic exponents: {e}"));
            None
        }
    };
    if !estimates.comparable {
        warnings.push("some injection stream is not Poisson; analytic columns are for reference only".into());
    }
    let mut table = table_for(
        "exponent",
        a,
        &loaded,
        a.common.seed,
        &[
            "delta",
            "k",
            "failures",
            "replications",
            "p_hat",
            "ci_lower",
            "ci_upper",
            "poisson_tail",
            "exponent_asymptotic",
            "exponent_lower",
            "exponent_upper",
        ],
    );
    table.set_meta("capacity", crate::table::format_float(c));
    table.set_meta("rate", crate::table::format_float(rate));
    table.set_meta("poisson_driven", estimates.comparable);
    table.set_meta(
        "tilt",
        tilt.map_or("none".to_string(), crate::table::format_float),
    );
    for e in &estimates.rows {
        let tail = if estimates.comparable {
            Some(poisson_tail_lower_bound(c, rate, e.delta)?)
        } else {
            None
        };
        table.push(vec![
            e.delta.into(),
            packetcode::analysis::ceil_count(rate * e.delta).into(),
            e.failures.into(),
            e.replications.into(),
            e.estimate.into(),
            e.lower.into(),
            e.upper.into(),
            tail.into(),
            curve.as_ref().map(|c| c.asymptotic).into(),
            curve.as_ref().map(|c| c.lower).into(),
            curve.as_ref().and_then(|c| c.upper).into(),
        ]);
    }
    let mut no_fit = None;
    match fit_empirical_exponent(&estimates.rows) {
        Ok(fit) => {
            table.set_meta("fitted_slope", crate::table::format_float(fit.slope));
            table.set_meta("slope_ci_lower", crate::table::format_float(fit.slope_lower));
            table.set_meta("slope_ci_upper", crate::table::format_float(fit.slope_upper));
            table.set_meta("fit_points", fit.points);
        }
        Err(Error::NoFit(msg)) => {
            table.set_meta("fitted_slope", "none");
            no_fit = Some(msg);
        }
        Err(e) => return Err(e.into()),
    }
    let mut report = Report::new(table);
    report.warnings = warnings;
    report.no_fit = no_fit;
    Ok(report)
}

pub fn fluidcheck(a: &FluidcheckArgs) -> Result<Report, CliError> {
    let loaded = load(&a.common)?;
    let net = &loaded.network;
    let (s, sinks) = resolve(net, &a.terminals)?;
    let [t] = sinks[..] else {
        return Err(CliError::Config("fluidcheck takes a single sink".into()));
    };
    let tau = positive(a.delta, "--delta")?;
    let times = if a.times.is_empty() {
        vec![tau / 2.0, tau]
    } else {
        a.times.clone()
    };
    if times.iter().any(|&x| !(x > 0.0 && x <= tau)) {
        return Err(CliError::Config("--times must lie in (0, delta]".into()));
    }
    let mut tracking = Tracking::tandem(net, s, t, a.rho, times.clone())?;
    tracking.verify = true;
    let path = tracking.paths.paths[0].clone();
    let Network::Wireline(w) = net else {
        unreachable!("tandem tracking accepts only wireline networks")
    };
    let z: Vec<f64> = path.links.iter().map(|&l| w.arc_rate(l)).collect();
    let prediction = fluid_queue_rates(&z, a.field, a.rho)?;
    let mut cfg = SimConfig::new(net.clone(), s, vec![Sink { node: t, deadline: tau }], a.k);
    cfg.field_order = a.field;
    cfg.seed = a.common.seed;
    cfg.replications = a.reps;
    cfg.intermediate_prune = false;
    cfg.decode_check = DecodeCheck::RankOnly;
    cfg.tracking = Some(tracking);
    let traces = run_replications(&cfg)?;
    let mut table = table_for(
        "fluidcheck",
        a,
        &loaded,
        a.common.seed,
        &["node", "time", "queue_mean", "slope", "prediction", "relative_error"],
    );
    table.set_meta(
        "z",
        z.iter().map(|&x| crate::table::format_float(x)).collect::<Vec<_>>().join(" "),
    );
    let (mut span, mut independence, mut gate, mut markings) = (0u64, 0u64, 0u64, 0u64);
    for tr in &traces {
        let rep = tr.innovation.as_ref().expect("tracking enabled");
        let v = rep.violations.expect("verification enabled");
        span += v.span;
        independence += v.independence;
        gate += v.gate;
        markings += rep.markings;
    }
    table.set_meta("markings", markings);
    table.set_meta("violations_span", span);
    table.set_meta("violations_independence", independence);
    table.set_meta("violations_gate", gate);
    let reps = traces.len().max(1) as f64;
    for (i, &growth) in prediction.growth.iter().enumerate() {
        for (g, &time) in times.iter().enumerate() {
            let mean = traces
                .iter()
                .map(|tr| tr.innovation.as_ref().expect("tracking enabled").paths[0].queue(g, i, a.rho) as f64)
                .sum::<f64>()
                / reps;
            let slope = mean / time;
            table.push(vec![
                label(net, path.nodes[i + 1]).into(),
                time.into(),
                mean.into(),
                slope.into(),
                growth.into(),
                if growth > 0.0 {
                    Value::from((slope - growth).abs() / growth)
                } else {
                    Value::Missing
                },
            ]);
        }
    }
    Ok(Report::new(table))
}
