//! Network descriptions: wireline graphs and wireless hypergraphs whose arcs
//! carry packet injection and loss processes, and the average reception
//! rates those processes induce.

mod aloha;
mod markov;

pub use aloha::{AlohaTableEntry, MAX_ALOHA_HYPERARCS};
pub use markov::MarkovChain;

use crate::capacity::{Hyperarc, Link, NodeSet, RateGraph, RateHypergraph};
use crate::error::{domain, Error, Result};

/// When packets are put onto an arc.
#[derive(Clone, Debug, PartialEq)]
pub enum Injection {
    /// Poisson process with the given rate.
    Poisson { rate: f64 },
    /// One packet at each integer time `0, 1, 2, ...`.
    Regular,
    /// Explicit injection times.
    Trace { times: Vec<f64> },
}

impl Injection {
    /// Long-run average injection rate. For a trace this is the number of
    /// injections divided by the last injection time.
    pub fn rate(&self) -> f64 {
        match self {
            Injection::Poisson { rate } => *rate,
            Injection::Regular => 1.0,
            Injection::Trace { times } => match times.last() {
                Some(&t) if t > 0.0 => times.len() as f64 / t,
                _ => 0.0,
            },
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        match self {
            Injection::Poisson { rate } if !(*rate >= 0.0) || !rate.is_finite() => {
                domain(format!("{what}: injection rate {rate} must be finite and nonnegative"))
            }
            Injection::Trace { times }
                if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite())
                    || times.windows(2).any(|w| w[1] < w[0]) =>
            {
                domain(format!("{what}: trace times must be finite, nonnegative and sorted"))
            }
            _ => Ok(()),
        }
    }
}

/// How injected packets are lost on an arc.
#[derive(Clone, Debug, PartialEq)]
pub enum Loss {
    None,
    /// Each packet lost independently with probability `eps`.
    Iid { eps: f64 },
    /// Losses modulated by a (possibly shared) Markov chain: in state `k`
    /// packets are lost with probability `eps[k]` and, if `rates` is given,
    /// injected as a Poisson process of rate `rates[k]`.
    Markov {
        chain: usize,
        eps: Vec<f64>,
        rates: Option<Vec<f64>>,
    },
}

/// The behaviour of a point-to-point arc.
#[derive(Clone, Debug, PartialEq)]
pub enum ArcProcess {
    /// Reception rate stated directly; simulated as a lossless Poisson stream.
    Rate(f64),
    Process { injection: Injection, loss: Loss },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub process: ArcProcess,
}

/// A lossy wireline network: directed arcs between labelled nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct WirelineNetwork {
    labels: Vec<u32>,
    chains: Vec<MarkovChain>,
    arcs: Vec<Arc>,
}

fn check_prob(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        domain(format!("{what}: probability {p} outside [0, 1]"))
    }
}

/// `z = (1 - eps) r` for i.i.d. losses.
pub fn effective_rate_iid(r: f64, eps: f64) -> Result<f64> {
    check_prob(eps, "loss probability")?;
    if !(r >= 0.0) || !r.is_finite() {
        return domain(format!("injection rate {r} must be finite and nonnegative"));
    }
    Ok((1.0 - eps) * r)
}

/// `z = Σ_k π_k (1 - eps_k) r_k` for Markov-modulated losses and injections.
pub fn effective_rate_markov(chain: &MarkovChain, eps: &[f64], rates: &[f64]) -> Result<f64> {
    let n = chain.states();
    if eps.len() != n || rates.len() != n {
        return domain(format!(
            "Markov loss needs {n} loss probabilities and rates, got {} and {}",
            eps.len(),
            rates.len()
        ));
    }
    let mut z = 0.0;
    for k in 0..n {
        z += chain.stationary()[k] * effective_rate_iid(rates[k], eps[k])?;
    }
    Ok(z)
}

fn process_rate(chains: &[MarkovChain], injection: &Injection, loss: &Loss) -> Result<f64> {
    let r = injection.rate();
    match loss {
        Loss::None => Ok(r),
        Loss::Iid { eps } => effective_rate_iid(r, *eps),
        Loss::Markov { chain, eps, rates } => {
            let c = chains
                .get(*chain)
                .ok_or_else(|| Error::Domain(format!("unknown Markov chain {chain}")))?;
            let per_state = match rates {
                Some(r) => r.clone(),
                None => vec![r; c.states()],
            };
            effective_rate_markov(c, eps, &per_state)
        }
    }
}

fn validate_process(chains: &[MarkovChain], injection: &Injection, loss: &Loss, what: &str) -> Result<()> {
    injection.validate(what)?;
    if let Loss::Markov { rates: Some(_), .. } = loss {
        if !matches!(injection, Injection::Poisson { .. }) {
            return domain(format!(
                "{what}: state-dependent injection rates need a Poisson injection process"
            ));
        }
    }
    process_rate(chains, injection, loss)
        .map(|_| ())
        .map_err(|e| Error::Domain(format!("{what}: {}", strip(e))))
}

fn strip(e: Error) -> String {
    match e {
        Error::Domain(m) => m,
        other => other.to_string(),
    }
}

fn check_labels(labels: &[u32]) -> Result<()> {
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return domain("duplicate node label");
    }
    Ok(())
}

impl WirelineNetwork {
    /// Arc endpoints are indices into `labels`.
    pub fn new(labels: Vec<u32>, chains: Vec<MarkovChain>, arcs: Vec<Arc>) -> Result<Self> {
        check_labels(&labels)?;
        let n = labels.len();
        for (a, arc) in arcs.iter().enumerate() {
            let what = format!("arc {a}");
            if arc.from >= n || arc.to >= n {
                return domain(format!("{what} references a node outside 0..{n}"));
            }
            if arc.from == arc.to {
                return domain(format!("{what} is a self-loop"));
            }
            match &arc.process {
                ArcProcess::Rate(z) if !(*z >= 0.0) || !z.is_finite() => {
                    return domain(format!("{what}: rate {z} must be finite and nonnegative"))
                }
                ArcProcess::Rate(_) => {}
                ArcProcess::Process { injection, loss } => {
                    validate_process(&chains, injection, loss, &what)?
                }
            }
        }
        Ok(Self { labels, chains, arcs })
    }

    /// Tandem `0 -> 1 -> ... -> L` with reception rates stated directly.
    pub fn tandem(z: &[f64]) -> Result<Self> {
        let arcs = z
            .iter()
            .enumerate()
            .map(|(i, &z)| Arc {
                from: i,
                to: i + 1,
                process: ArcProcess::Rate(z),
            })
            .collect();
        Self::new((1..=z.len() as u32 + 1).collect(), Vec::new(), arcs)
    }

    /// Tandem with Poisson injections of rate `r` on every arc and i.i.d.
    /// loss probabilities `eps`.
    pub fn tandem_iid(r: f64, eps: &[f64]) -> Result<Self> {
        let arcs = eps
            .iter()
            .enumerate()
            .map(|(i, &eps)| Arc {
                from: i,
                to: i + 1,
                process: ArcProcess::Process {
                    injection: Injection::Poisson { rate: r },
                    loss: Loss::Iid { eps },
                },
            })
            .collect();
        Self::new((1..=eps.len() as u32 + 1).collect(), Vec::new(), arcs)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn chains(&self) -> &[MarkovChain] {
        &self.chains
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Average reception rate `z_ij` of arc `a`.
    pub fn arc_rate(&self, a: usize) -> f64 {
        match &self.arcs[a].process {
            ArcProcess::Rate(z) => *z,
            ArcProcess::Process { injection, loss } => {
                process_rate(&self.chains, injection, loss).expect("validated at construction")
            }
        }
    }

    pub fn rate_graph(&self) -> RateGraph<f64> {
        RateGraph::new(
            self.node_count(),
            (0..self.arcs.len())
                .map(|a| Link {
                    from: self.arcs[a].from,
                    to: self.arcs[a].to,
                    z: self.arc_rate(a),
                })
                .collect(),
        )
        .expect("validated at construction")
    }

    /// Replaces arc `a = (i, j)` by a lossy arc `(i, i')` carrying the
    /// original process and a lossless arc `(i', j)` of the same rate, where
    /// `i'` is a new node appended at the end.
    pub fn transform_delay_link(&self, a: usize) -> Result<Self> {
        let Some(arc) = self.arcs.get(a) else {
            return domain(format!("no arc {a}"));
        };
        let z = self.arc_rate(a);
        let mid = self.node_count();
        let label = self.labels.iter().max().map_or(0, |m| m + 1);
        let mut labels = self.labels.clone();
        labels.push(label);
        let mut arcs = self.arcs.clone();
        arcs[a] = Arc {
            from: arc.from,
            to: mid,
            process: arc.process.clone(),
        };
        arcs.push(Arc {
            from: mid,
            to: arc.to,
            process: ArcProcess::Rate(z),
        });
        Self::new(labels, self.chains.clone(), arcs)
    }
}

/// The behaviour of a broadcast hyperarc.
#[derive(Clone, Debug, PartialEq)]
pub enum HyperarcProcess {
    /// Rates `z_iJK` stated directly; simulated as a Poisson stream of total
    /// rate `Σ_K z_iJK` whose packets reach `K` with probability `z_iJK / Σ z`.
    Rates(Vec<(NodeSet, f64)>),
    /// Injections whose packets reach exactly `K` with probability `p_K`
    /// (the remainder is lost).
    Random {
        injection: Injection,
        reception: Vec<(NodeSet, f64)>,
    },
    /// Slotted Aloha: transmit with probability `q` in each unit slot.
    /// Receptions follow `table` when it has an entry for the set of other
    /// transmitting hyperarcs, and the collision rule otherwise.
    Aloha {
        q: f64,
        table: Vec<AlohaTableEntry>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct WirelessHyperarc {
    pub from: usize,
    pub to: NodeSet,
    pub process: HyperarcProcess,
}

/// A lossy wireless network: broadcast hyperarcs between labelled nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct WirelessNetwork {
    labels: Vec<u32>,
    hyperarcs: Vec<WirelessHyperarc>,
    /// Per node: which transmitters destroy its receptions under the
    /// collision rule.
    interferers: Vec<NodeSet>,
    /// Reception rates, derived once at construction.
    rates: Vec<Vec<(NodeSet, f64)>>,
}

impl WirelessNetwork {
    /// `interferers[j]`, when given, lists the nodes whose transmissions
    /// collide at `j`; by default every other node interferes.
    pub fn new(
        labels: Vec<u32>,
        hyperarcs: Vec<WirelessHyperarc>,
        interferers: Option<Vec<NodeSet>>,
    ) -> Result<Self> {
        check_labels(&labels)?;
        let n = labels.len();
        if n > NodeSet::MAX_NODES {
            return Err(Error::Guard(format!(
                "wireless networks are limited to {} nodes",
                NodeSet::MAX_NODES
            )));
        }
        let all: NodeSet = (0..n).collect();
        let interferers = match interferers {
            Some(v) if v.len() != n => {
                return domain(format!("interferer list has {} entries for {n} nodes", v.len()))
            }
            Some(v) => {
                if v.iter().any(|s| !s.is_subset_of(all)) {
                    return domain("interferer set references an unknown node");
                }
                v
            }
            None => (0..n).map(|j| all.minus(NodeSet::singleton(j))).collect(),
        };
        for (a, h) in hyperarcs.iter().enumerate() {
            let what = format!("hyperarc {a}");
            if h.from >= n || !h.to.is_subset_of(all) {
                return domain(format!("{what} references a node outside 0..{n}"));
            }
            if h.to.is_empty() || h.to.contains(h.from) {
                return domain(format!(
                    "{what}: receiver set must be nonempty and exclude the transmitter"
                ));
            }
            let check_sets = |sets: &[(NodeSet, f64)], probs: bool| -> Result<()> {
                for &(k, v) in sets {
                    if k.is_empty() || !k.is_subset_of(h.to) {
                        return domain(format!("{what}: {k:?} is not a nonempty subset of {:?}", h.to));
                    }
                    if probs {
                        check_prob(v, &what)?;
                    } else if !(v >= 0.0) || !v.is_finite() {
                        return domain(format!("{what}: rate {v} must be finite and nonnegative"));
                    }
                }
                if probs && sets.iter().map(|&(_, p)| p).sum::<f64>() > 1.0 + 1e-12 {
                    return domain(format!("{what}: reception probabilities sum above 1"));
                }
                Ok(())
            };
            match &h.process {
                HyperarcProcess::Rates(r) => check_sets(r, false)?,
                HyperarcProcess::Random {
                    injection,
                    reception,
                } => {
                    injection.validate(&what)?;
                    check_sets(reception, true)?;
                }
                HyperarcProcess::Aloha { q, table } => {
                    check_prob(*q, &what)?;
                    for e in table {
                        check_sets(&e.reception, true)?;
                        for &o in &e.others {
                            if o == a
                                || !matches!(
                                    hyperarcs.get(o).map(|x| &x.process),
                                    Some(HyperarcProcess::Aloha { .. })
                                )
                            {
                                return domain(format!(
                                    "{what}: table entry lists {o}, which is not another Aloha hyperarc"
                                ));
                            }
                        }
                    }
                }
            }
        }
        let mut net = Self {
            labels,
            hyperarcs,
            interferers,
            rates: Vec::new(),
        };
        net.rates = net.derive_rates()?;
        Ok(net)
    }

    /// The relay network of three nodes with Aloha hyperarcs `(1, {2, 3})`
    /// and `(2, {3})`, both transmitting with probability `q`. Node 3 hears
    /// collisions between 1 and 2; node 2 hears node 1 regardless.
    pub fn aloha_relay(q: f64) -> Result<Self> {
        let set = |v: &[usize]| v.iter().copied().collect::<NodeSet>();
        let aloha = || HyperarcProcess::Aloha {
            q,
            table: Vec::new(),
        };
        Self::new(
            vec![1, 2, 3],
            vec![
                WirelessHyperarc {
                    from: 0,
                    to: set(&[1, 2]),
                    process: aloha(),
                },
                WirelessHyperarc {
                    from: 1,
                    to: set(&[2]),
                    process: aloha(),
                },
            ],
            Some(vec![NodeSet::empty(), NodeSet::empty(), set(&[0, 1])]),
        )
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn hyperarcs(&self) -> &[WirelessHyperarc] {
        &self.hyperarcs
    }

    pub fn interferers(&self) -> &[NodeSet] {
        &self.interferers
    }

    /// Reception rates `z_iJK` of hyperarc `a`, ascending in `K`.
    pub fn reception_rates(&self, a: usize) -> &[(NodeSet, f64)] {
        &self.rates[a]
    }

    fn derive_rates(&self) -> Result<Vec<Vec<(NodeSet, f64)>>> {
        let aloha = if self.has_aloha() {
            Some(self.aloha_reception_rates()?)
        } else {
            None
        };
        Ok(self
            .hyperarcs
            .iter()
            .enumerate()
            .map(|(a, h)| {
                let mut r: Vec<(NodeSet, f64)> = match &h.process {
                    HyperarcProcess::Rates(r) => r.clone(),
                    HyperarcProcess::Random {
                        injection,
                        reception,
                    } => reception
                        .iter()
                        .map(|&(k, p)| (k, p * injection.rate()))
                        .collect(),
                    HyperarcProcess::Aloha { .. } => aloha.as_ref().expect("aloha rates")[a].clone(),
                };
                r.sort_by_key(|&(k, _)| k);
                r.dedup_by(|b, a| {
                    if a.0 == b.0 {
                        a.1 += b.1;
                        true
                    } else {
                        false
                    }
                });
                r
            })
            .collect())
    }

    fn has_aloha(&self) -> bool {
        self.hyperarcs
            .iter()
            .any(|h| matches!(h.process, HyperarcProcess::Aloha { .. }))
    }

    pub fn rate_hypergraph(&self) -> RateHypergraph<f64> {
        RateHypergraph::new(
            self.node_count(),
            self.hyperarcs
                .iter()
                .zip(&self.rates)
                .map(|(h, r)| Hyperarc {
                    from: h.from,
                    to: h.to,
                    rates: r.clone(),
                })
                .collect(),
        )
        .expect("validated at construction")
    }
}

/// Either kind of network.
#[derive(Clone, Debug, PartialEq)]
pub enum Network {
    Wireline(WirelineNetwork),
    Wireless(WirelessNetwork),
}

impl Network {
    pub fn labels(&self) -> &[u32] {
        match self {
            Network::Wireline(n) => n.labels(),
            Network::Wireless(n) => n.labels(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels().len()
    }

    /// Index of the node with the given label.
    pub fn node_index(&self, label: u32) -> Option<usize> {
        self.labels().iter().position(|&l| l == label)
    }

    /// The network as a rate hypergraph; wireline arcs become hyperarcs with
    /// a single receiver.
    pub fn rate_hypergraph(&self) -> RateHypergraph<f64> {
        match self {
            Network::Wireline(n) => {
                RateHypergraph::from_graph(&n.rate_graph()).expect("valid graph")
            }
            Network::Wireless(n) => n.rate_hypergraph(),
        }
    }

    /// Number of links: arcs or hyperarcs.
    pub fn link_count(&self) -> usize {
        match self {
            Network::Wireline(n) => n.arcs().len(),
            Network::Wireless(n) => n.hyperarcs().len(),
        }
    }
}
