use rayon::prelude::*;

use super::{engine, run_replications, Mode, SimConfig, SinkOutcome};
use crate::analysis::{ceil_count, wilson_interval, ErrorEstimate, Z95};
use crate::error::{domain, Result};
use crate::netmodel::{ArcProcess, HyperarcProcess, Injection, Loss, Network};

/// Runs every replication of a (possibly multi-sink) configuration and
/// returns the sink outcomes of each, in replication order.
pub fn multicast_run(config: &SimConfig) -> Result<Vec<Vec<SinkOutcome>>> {
    Ok(run_replications(config)?
        .into_iter()
        .map(|t| t.sinks)
        .collect())
}

/// Whether every injection stream of the network is a Poisson process, the
/// setting in which empirical error rates compare with the exponents.
pub fn is_poisson_driven(network: &Network) -> bool {
    let poisson = |i: &Injection| matches!(i, Injection::Poisson { .. });
    match network {
        Network::Wireline(w) => w.arcs().iter().all(|a| match &a.process {
            ArcProcess::Rate(_) => true,
            ArcProcess::Process { injection, loss } => {
                poisson(injection) && !matches!(loss, Loss::Markov { rates: Some(_), .. })
            }
        }),
        Network::Wireless(w) => w.hyperarcs().iter().all(|h| match &h.process {
            HyperarcProcess::Rates(_) => true,
            HyperarcProcess::Random { injection, .. } => poisson(injection),
            HyperarcProcess::Aloha { .. } => false,
        }),
    }
}

/// Estimated decoding error probabilities over a grid of coding delays.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorTable {
    pub rate: f64,
    pub rows: Vec<ErrorEstimate<f64>>,
    /// False when some injection stream is not Poisson.
    pub comparable: bool,
    /// Injection tilt used for importance sampling, if any.
    pub tilt: Option<f64>,
}

/// Estimates `Pr(some sink fails to decode at Δ)` for each `Δ` in `deltas`,
/// with `K = ⌈RΔ⌉` messages and every sink's deadline set to `Δ`.
///
/// Without a tilt the estimate is the failure frequency with a Wilson 95%
/// interval. With `config.injection_tilt` set, Poisson injection rates are
/// scaled by the tilt, each failure is weighted by its likelihood ratio, and
/// the interval is the normal 95% interval of the weighted mean.
pub fn estimate_error_probability(
    config: &SimConfig,
    rate: f64,
    deltas: &[f64],
    replications: u64,
) -> Result<ErrorTable> {
    if replications == 0 {
        return domain("at least one replication is required");
    }
    if deltas.is_empty() {
        return domain("the delay grid is empty");
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return domain(format!("rate {rate} must be positive and finite"));
    }
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        if !(delta > 0.0 && delta.is_finite()) {
            return domain(format!("delay {delta} must be positive and finite"));
        }
        let k = ceil_count(rate * delta) as usize;
        if k == 0 {
            return domain(format!("R Δ = {} rounds up to zero messages", rate * delta));
        }
        let mut cfg = config.clone();
        cfg.k = k;
        cfg.mode = Mode::Block;
        cfg.stop_when_decoded = true;
        cfg.replications = replications;
        cfg.event_log = false;
        cfg.tracking = None;
        for s in &mut cfg.sinks {
            s.deadline = delta;
        }
        engine::validate(&cfg)?;
        let runs: Vec<(bool, f64)> = (0..replications)
            .into_par_iter()
            .map(|r| {
                engine::simulate(&cfg, r).map(|t| (t.sinks.iter().any(|s| !s.decoded), t.log_weight))
            })
            .collect::<Result<_>>()?;
        let failures = runs.iter().filter(|r| r.0).count() as u64;
        let (estimate, lower, upper) = match cfg.injection_tilt {
            None => {
                let (lo, hi) = wilson_interval(failures, replications, Z95);
                (failures as f64 / replications as f64, lo, hi)
            }
            Some(_) => {
                let n = replications as f64;
                let x: Vec<f64> = runs
                    .iter()
                    .map(|&(f, lw)| if f { lw.exp() } else { 0.0 })
                    .collect();
                let mean = x.iter().sum::<f64>() / n;
                let var = if replications > 1 {
                    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                let half = Z95 * (var / n).sqrt();
                (mean, (mean - half).max(0.0), (mean + half).min(1.0))
            }
        };
        rows.push(ErrorEstimate {
            delta,
            estimate,
            lower,
            upper,
            failures,
            replications,
        });
    }
    Ok(ErrorTable {
        rate,
        rows,
        comparable: is_poisson_driven(&config.network),
        tilt: config.injection_tilt,
    })
}
