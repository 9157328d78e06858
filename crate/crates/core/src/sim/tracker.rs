//! Replay of a reception log that marks innovative packets along the paths
//! of a flow decomposition.
//!
//! For path `m` with nodes `n_0 = s, n_1, ..., n_L`, the set at `n_1` (the
//! first hop, `U`) collects every reception assigned to the path. Further
//! down, a reception at `n_i` is marked innovative when it is assigned to the
//! path, is a candidate (probability `1 - q^-ρ`), the previous set is larger
//! than the current one by at least `ρ`, and its auxiliary vector lies
//! outside the span of the current set together with the final last-hop sets
//! of earlier paths and the final first-hop sets of later paths.

use std::rc::Rc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::beta::{rank_of, Beta, Span};
use super::SimConfig;
use crate::analysis::innovation_factor;
use crate::capacity::{
    decompose_paths, max_flow_wireless, max_flow_wireline, remove_cycles, FlowPath, HyperFlow,
    NodeSet, PathDecomposition, RateHypergraph,
};
use crate::error::{domain, Result};
use crate::gf::FieldContext;
use crate::netmodel::Network;

/// How a reception is assigned to a path (the variable `P_x`).
#[derive(Clone, Debug, PartialEq)]
pub enum Selection {
    /// A single path that owns every reception on its hops.
    AllTraffic,
    /// Path `m` with probability `R_m / z` on wireline arc hops.
    Wireline,
    /// Path `m` with probability `R_m α^(j)_K / Σ_{L ∋ j} α^(j)_L z_L`, where
    /// `j` is the path's next hop and `K` the reception set.
    Wireless {
        flow: HyperFlow<f64>,
        hypergraph: RateHypergraph<f64>,
    },
}

/// Innovation-tracking settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Tracking {
    /// Innovation order ρ.
    pub rho: u32,
    pub paths: PathDecomposition<f64>,
    pub selection: Selection,
    /// Times at which set sizes are sampled.
    pub grid: Vec<f64>,
    /// Re-derive the soundness conditions from scratch after the replay.
    pub verify: bool,
}

impl Tracking {
    /// Tracks the single path of a wireline tandem from `source` to `sink`.
    pub fn tandem(network: &Network, source: usize, sink: usize, rho: u32, grid: Vec<f64>) -> Result<Self> {
        let Network::Wireline(w) = network else {
            return domain("tandem tracking needs a wireline network");
        };
        let mut nodes = vec![source];
        let mut links = Vec::new();
        let mut cur = source;
        while cur != sink {
            let out: Vec<usize> = (0..w.arcs().len()).filter(|&a| w.arcs()[a].from == cur).collect();
            let [a] = out[..] else {
                return domain(format!(
                    "node {cur} has {} outgoing arcs; a tandem needs exactly one",
                    out.len()
                ));
            };
            cur = w.arcs()[a].to;
            if nodes.contains(&cur) {
                return domain("the arcs from the source loop back before reaching the sink");
            }
            nodes.push(cur);
            links.push(a);
        }
        if links.is_empty() {
            return domain("source and sink coincide");
        }
        let rate = links.iter().map(|&a| w.arc_rate(a)).fold(f64::INFINITY, f64::min);
        let path = FlowPath {
            arcs: links.clone(),
            links,
            nodes,
            rate,
        };
        Ok(Self {
            rho,
            paths: PathDecomposition {
                source,
                sink,
                paths: vec![path],
            },
            selection: Selection::AllTraffic,
            grid,
            verify: true,
        })
    }

    /// Tracks the paths of a maximum flow from `source` to `sink`.
    pub fn unicast(network: &Network, source: usize, sink: usize, rho: u32, grid: Vec<f64>) -> Result<Self> {
        let (paths, selection) = match network {
            Network::Wireline(w) => {
                let flow = max_flow_wireline(&w.rate_graph(), source, sink, None);
                (decompose_paths(&remove_cycles(&flow))?, Selection::Wireline)
            }
            Network::Wireless(w) => {
                let hypergraph = w.rate_hypergraph();
                let flow = max_flow_wireless(&hypergraph, source, sink)?;
                let paths = decompose_paths(&flow.to_arc_flow(&hypergraph))?;
                (paths, Selection::Wireless { flow, hypergraph })
            }
        };
        Ok(Self {
            rho,
            paths,
            selection,
            grid,
            verify: true,
        })
    }

    pub(crate) fn validate(&self, cfg: &SimConfig) -> Result<()> {
        if self.rho == 0 {
            return domain("innovation order must be at least 1");
        }
        if self.paths.paths.is_empty() {
            return domain("innovation tracking needs at least one path");
        }
        if self.grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite())
            || self.grid.windows(2).any(|w| w[1] < w[0])
        {
            return domain("tracking grid must be finite, nonnegative and sorted");
        }
        match (&self.selection, &cfg.network) {
            (Selection::AllTraffic, Network::Wireline(_)) if self.paths.paths.len() != 1 => {
                return domain("all-traffic tracking takes exactly one path")
            }
            (Selection::AllTraffic | Selection::Wireline, Network::Wireline(_)) => {}
            (Selection::Wireless { .. }, Network::Wireless(_)) => {}
            _ => return domain("path selection rule does not match the network kind"),
        }
        for (m, p) in self.paths.paths.iter().enumerate() {
            if p.nodes.len() < 2 || p.links.len() + 1 != p.nodes.len() {
                return domain(format!("path {m} is malformed"));
            }
            if p.nodes[0] != cfg.source {
                return domain(format!("path {m} does not start at the source"));
            }
            for (h, &a) in p.links.iter().enumerate() {
                let (from, to) = link_ends(&cfg.network, a)
                    .ok_or_else(|| crate::Error::Domain(format!("path {m} uses unknown link {a}")))?;
                if from != p.nodes[h] || !to.contains(p.nodes[h + 1]) {
                    return domain(format!("hop {h} of path {m} does not follow link {a}"));
                }
            }
        }
        Ok(())
    }
}

fn link_ends(network: &Network, a: usize) -> Option<(usize, NodeSet)> {
    match network {
        Network::Wireline(w) => w.arcs().get(a).map(|x| (x.from, NodeSet::singleton(x.to))),
        Network::Wireless(w) => w.hyperarcs().get(a).map(|h| (h.from, h.to)),
    }
}

/// A logged reception: the packet, the link it crossed and who got it.
#[derive(Clone, Debug)]
pub(crate) struct Reception {
    pub time: f64,
    pub link: usize,
    pub set: NodeSet,
    pub beta: Rc<Beta>,
}

/// Innovative-packet counts along one path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathInnovation {
    pub nodes: Vec<usize>,
    pub rate: f64,
    /// `counts[g][i]`: size of the set at `nodes[i + 1]` at grid time `g`.
    pub counts: Vec<Vec<usize>>,
    /// Set sizes at the end of the run; the first is `|U|`, the last `|W|`.
    pub final_counts: Vec<usize>,
    /// Per node (as in `final_counts`): receptions assigned to the path
    /// that passed the size gate. Zero at the first hop, which has no gate.
    pub gated: Vec<u64>,
    /// Of those, how many had an auxiliary vector outside the current span.
    pub independent: Vec<u64>,
}

impl PathInnovation {
    /// `|U|`: innovative packets at the first hop.
    pub fn first_hop(&self) -> usize {
        self.final_counts[0]
    }

    /// `|W|`: innovative packets at the last node.
    pub fn last_hop(&self) -> usize {
        *self.final_counts.last().expect("paths have at least one hop")
    }

    /// Innovative packets queued at `nodes[i + 1]` at grid time `g`:
    /// `(|V_i| - |V_{i+1}| - ρ + 1)^+`. Needs `i + 2 < nodes.len()`.
    pub fn queue(&self, g: usize, i: usize, rho: u32) -> usize {
        let c = &self.counts[g];
        (c[i] as i64 - c[i + 1] as i64 - rho as i64 + 1).max(0) as usize
    }
}

/// Failures of the soundness conditions, recomputed from the final sets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Violations {
    /// Rank shortfall of `V ∪ Ṽ` at marked nodes: each unit is a marked
    /// packet that did not enlarge the span.
    pub span: u64,
    /// Rank shortfall of the union of the last-hop sets.
    pub independence: u64,
    /// Markings where the size gate did not hold.
    pub gate: u64,
}

impl Violations {
    pub fn total(&self) -> u64 {
        self.span + self.independence + self.gate
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnovationReport {
    pub rho: u32,
    pub grid: Vec<f64>,
    pub paths: Vec<PathInnovation>,
    /// `sink_rank[s][g]`: rank of sink `s` at grid time `g`.
    pub sink_rank: Vec<Vec<usize>>,
    /// Receptions that no path claimed, including all receptions on links
    /// outside the decomposition.
    pub no_path: u64,
    pub markings: u64,
    pub violations: Option<Violations>,
}

/// Hop of a path that a reception can belong to.
struct Hop {
    path: usize,
    /// Index of the receiving node in the path.
    pos: usize,
    receiver: usize,
    rate: f64,
}

fn selection_probability(
    tracking: &Tracking,
    network: &Network,
    link: usize,
    set: NodeSet,
    hop: &Hop,
) -> f64 {
    match &tracking.selection {
        Selection::AllTraffic => 1.0,
        Selection::Wireline => {
            let Network::Wireline(w) = network else {
                unreachable!("validated")
            };
            let z = w.arc_rate(link);
            if z > 0.0 {
                hop.rate / z
            } else {
                0.0
            }
        }
        Selection::Wireless { flow, hypergraph } => {
            let cap = flow.selection_capacity(hypergraph, link, hop.receiver);
            if cap > 0.0 {
                hop.rate * flow.alpha(link, set, hop.receiver) / cap
            } else {
                0.0
            }
        }
    }
}

pub(crate) fn replay(
    tracking: &Tracking,
    network: &Network,
    ctx: &FieldContext,
    log: &[Reception],
    sink_rank: Vec<Vec<usize>>,
    rng: &mut ChaCha8Rng,
) -> Result<InnovationReport> {
    let paths = &tracking.paths.paths;
    let rho = tracking.rho as usize;
    let candidate_prob: f64 = innovation_factor(ctx.order(), tracking.rho)?;

    let mut hops: Vec<Vec<Hop>> = (0..network.link_count()).map(|_| Vec::new()).collect();
    for (m, p) in paths.iter().enumerate() {
        for (h, &a) in p.links.iter().enumerate() {
            hops[a].push(Hop {
                path: m,
                pos: h + 1,
                receiver: p.nodes[h + 1],
                rate: p.rate,
            });
        }
    }

    // P_x and the candidate coin, drawn once per logged packet
    let mut no_path = 0;
    let mut assigned: Vec<Option<(usize, usize)>> = Vec::with_capacity(log.len());
    let mut candidate = Vec::with_capacity(log.len());
    for r in log {
        let u: f64 = rng.gen();
        candidate.push(rng.gen::<f64>() < candidate_prob);
        let mut acc = 0.0;
        let mut pick = None;
        for hop in hops[r.link].iter().filter(|h| r.set.contains(h.receiver)) {
            acc += selection_probability(tracking, network, r.link, r.set, hop);
            if u < acc {
                pick = Some((hop.path, hop.pos));
                break;
            }
        }
        if pick.is_none() {
            no_path += 1;
        }
        assigned.push(pick);
    }

    let first_hop: Vec<Vec<Rc<Beta>>> = (0..paths.len())
        .map(|m| {
            log.iter()
                .zip(&assigned)
                .filter(|(_, a)| **a == Some((m, 1)))
                .map(|(r, _)| r.beta.clone())
                .collect()
        })
        .collect();

    let mut last_hop: Vec<Vec<Rc<Beta>>> = Vec::with_capacity(paths.len());
    let mut reports = Vec::with_capacity(paths.len());
    let mut others: Vec<Vec<Rc<Beta>>> = Vec::with_capacity(paths.len());
    // (path, position, log index) of every entry into a set, in log order
    let mut entries: Vec<Vec<Vec<usize>>> = Vec::with_capacity(paths.len());
    let mut marks: Vec<(usize, usize, usize)> = Vec::new();
    let mut sets: Vec<Vec<Vec<Rc<Beta>>>> = Vec::with_capacity(paths.len());

    for (m, p) in paths.iter().enumerate() {
        let len = p.nodes.len();
        let other: Vec<Rc<Beta>> = last_hop[..m]
            .iter()
            .chain(&first_hop[m + 1..])
            .flatten()
            .cloned()
            .collect();
        let mut base = Span::new(ctx);
        for b in &other {
            base.insert(ctx, b);
        }
        let mut spans: Vec<Span> = vec![base; len];
        let mut v: Vec<Vec<Rc<Beta>>> = vec![Vec::new(); len];
        let mut count = vec![0usize; len];
        let mut gated = vec![0u64; len];
        let mut independent = vec![0u64; len];
        let mut samples = Vec::with_capacity(tracking.grid.len());
        let mut path_entries: Vec<Vec<usize>> = vec![Vec::new(); len];
        for (x, r) in log.iter().enumerate() {
            while samples.len() < tracking.grid.len() && tracking.grid[samples.len()] < r.time {
                samples.push(count[1..].to_vec());
            }
            let Some((pm, pos)) = assigned[x] else {
                continue;
            };
            if pm != m {
                continue;
            }
            if pos == 1 {
                v[1].push(r.beta.clone());
                count[1] += 1;
                path_entries[1].push(x);
                continue;
            }
            // gate: |V_{l-1}| > |V_l| + rho - 1
            if count[pos - 1] < count[pos] + rho {
                continue;
            }
            gated[pos] += 1;
            let reduced = spans[pos].reduce(ctx, &r.beta);
            if reduced.is_zero() {
                continue;
            }
            independent[pos] += 1;
            if candidate[x] {
                spans[pos].insert_reduced(ctx, reduced);
                v[pos].push(r.beta.clone());
                count[pos] += 1;
                path_entries[pos].push(x);
                marks.push((m, pos, x));
            }
        }
        while samples.len() < tracking.grid.len() {
            samples.push(count[1..].to_vec());
        }
        last_hop.push(v[len - 1].clone());
        reports.push(PathInnovation {
            nodes: p.nodes.clone(),
            rate: p.rate,
            counts: samples,
            final_counts: count[1..].to_vec(),
            gated: gated[1..].to_vec(),
            independent: independent[1..].to_vec(),
        });
        others.push(other);
        entries.push(path_entries);
        sets.push(v);
    }

    let violations = tracking.verify.then(|| {
        let mut out = Violations::default();
        for (m, v) in sets.iter().enumerate() {
            for set in &v[2..] {
                let all: Vec<&Beta> = set.iter().chain(&others[m]).map(|b| &**b).collect();
                out.span += (all.len() - rank_of(ctx, &all)) as u64;
            }
        }
        let w: Vec<&Beta> = last_hop.iter().flatten().map(|b| &**b).collect();
        out.independence = (w.len() - rank_of(ctx, &w)) as u64;
        for &(m, pos, x) in &marks {
            let before = |p: usize| entries[m][p].partition_point(|&y| y < x);
            if before(pos - 1) < before(pos) + rho {
                out.gate += 1;
            }
        }
        out
    });

    Ok(InnovationReport {
        rho: tracking.rho,
        grid: tracking.grid.clone(),
        paths: reports,
        sink_rank,
        no_path,
        markings: marks.len() as u64,
        violations,
    })
}
