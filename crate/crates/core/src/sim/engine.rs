use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::beta::{combine, Beta};
use super::queue::{EventKind, EventQueue};
use super::tracker::{self, Reception as TrackedReception};
use super::{
    DecodeCheck, LinkStats, LogKind, LogRecord, Mode, SimConfig, SimTrace, SinkOutcome,
};
use crate::capacity::NodeSet;
use crate::codec::{NodeMemory, Packet, Reception, Session};
use crate::error::{domain, Result};
use crate::gf::FieldContext;
use crate::netmodel::{
    ArcProcess, HyperarcProcess, Injection, Loss, MarkovChain, Network,
};

/// When a link injects packets.
enum Driver {
    Poisson { rate: f64 },
    /// Poisson with a rate set by the state of a Markov chain.
    Modulated { chain: usize, rates: Vec<f64> },
    Regular,
    Trace(Vec<f64>),
    /// Driven by the shared Aloha slot clock.
    Slotted,
}

/// What happens to an injected packet.
enum Delivery {
    Wire { to: usize, loss: WireLoss },
    /// Reaches exactly `K` with probability `p_K`; leftover mass is loss.
    Broadcast(Vec<(NodeSet, f64)>),
    Aloha,
}

enum WireLoss {
    None,
    Iid(f64),
    Markov { chain: usize, eps: Vec<f64> },
}

struct LinkPlan {
    from: usize,
    driver: Driver,
    delivery: Delivery,
    /// Untilted rate of a tilted Poisson driver.
    tilted_from: Option<f64>,
}

fn driver_for(injection: &Injection) -> Driver {
    match injection {
        Injection::Poisson { rate } => Driver::Poisson { rate: *rate },
        Injection::Regular => Driver::Regular,
        Injection::Trace { times } => Driver::Trace(times.clone()),
    }
}

fn plans(network: &Network) -> Vec<LinkPlan> {
    let plan = |from, driver, delivery| LinkPlan {
        from,
        driver,
        delivery,
        tilted_from: None,
    };
    match network {
        Network::Wireline(n) => n
            .arcs()
            .iter()
            .map(|a| match &a.process {
                ArcProcess::Rate(z) => plan(
                    a.from,
                    Driver::Poisson { rate: *z },
                    Delivery::Wire {
                        to: a.to,
                        loss: WireLoss::None,
                    },
                ),
                ArcProcess::Process { injection, loss } => {
                    let (driver, loss) = match loss {
                        Loss::None => (driver_for(injection), WireLoss::None),
                        Loss::Iid { eps } => (driver_for(injection), WireLoss::Iid(*eps)),
                        Loss::Markov { chain, eps, rates } => (
                            match rates {
                                Some(r) => Driver::Modulated {
                                    chain: *chain,
                                    rates: r.clone(),
                                },
                                None => driver_for(injection),
                            },
                            WireLoss::Markov {
                                chain: *chain,
                                eps: eps.clone(),
                            },
                        ),
                    };
                    plan(a.from, driver, Delivery::Wire { to: a.to, loss })
                }
            })
            .collect(),
        Network::Wireless(n) => n
            .hyperarcs()
            .iter()
            .map(|h| match &h.process {
                HyperarcProcess::Rates(z) => {
                    let total: f64 = z.iter().map(|&(_, r)| r).sum();
                    let probs = if total > 0.0 {
                        z.iter().map(|&(k, r)| (k, r / total)).collect()
                    } else {
                        Vec::new()
                    };
                    plan(h.from, Driver::Poisson { rate: total }, Delivery::Broadcast(probs))
                }
                HyperarcProcess::Random {
                    injection,
                    reception,
                } => plan(
                    h.from,
                    driver_for(injection),
                    Delivery::Broadcast(reception.clone()),
                ),
                HyperarcProcess::Aloha { .. } => plan(h.from, Driver::Slotted, Delivery::Aloha),
            })
            .collect(),
    }
}

pub(crate) fn validate(cfg: &SimConfig) -> Result<()> {
    let n = cfg.network.node_count();
    if cfg.k == 0 || cfg.payload_len == 0 {
        return domain(format!(
            "need K >= 1 and payload length >= 1, got K={}, length={}",
            cfg.k, cfg.payload_len
        ));
    }
    FieldContext::with_order(cfg.field_order)?;
    if cfg.source >= n {
        return domain(format!("source {} is not a node", cfg.source));
    }
    if cfg.sinks.is_empty() {
        return domain("at least one sink is required");
    }
    for s in &cfg.sinks {
        if s.node >= n {
            return domain(format!("sink {} is not a node", s.node));
        }
        if s.node == cfg.source {
            return domain(format!("sink {} is the source", s.node));
        }
        if cfg.mode == Mode::Block && !(s.deadline > 0.0 && s.deadline.is_finite()) {
            return domain(format!("sink {} needs a positive finite deadline", s.node));
        }
    }
    if let Mode::Rateless { horizon } = cfg.mode {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return domain(format!("rateless horizon {horizon} must be positive and finite"));
        }
    }
    if let Some(t) = cfg.injection_tilt {
        if !(t > 0.0 && t.is_finite()) {
            return domain(format!("injection tilt {t} must be positive and finite"));
        }
        if plans(&cfg.network)
            .iter()
            .any(|p| matches!(p.driver, Driver::Modulated { .. }))
        {
            return domain("importance sampling is not supported with state-dependent injection rates");
        }
    }
    if let Some(tr) = &cfg.tracking {
        if cfg.intermediate_prune {
            return domain(
                "innovation tracking needs intermediate nodes to keep every packet (intermediate_prune = false)",
            );
        }
        tr.validate(cfg)?;
    }
    Ok(())
}

struct Run<'a> {
    cfg: &'a SimConfig,
    ctx: FieldContext,
    session: Session,
    rng: ChaCha8Rng,
    queue: EventQueue,
    plans: Vec<LinkPlan>,
    chains: Vec<MarkovChain>,
    chain_state: Vec<usize>,
    generation: Vec<u64>,
    /// Per link: index of the next Regular or Trace injection.
    cursor: Vec<usize>,
    slot: u64,
    horizon: f64,
    memories: Vec<NodeMemory>,
    is_sink: Vec<Option<usize>>,
    received: Vec<u64>,
    full_rank_time: Vec<Option<f64>>,
    outcomes: Vec<Option<SinkOutcome>>,
    stats: Vec<LinkStats>,
    log: Option<Vec<LogRecord>>,
    next_packet: u64,
    // tracking
    betas: Option<Vec<Vec<Rc<Beta>>>>,
    next_unit: usize,
    tracked: Vec<TrackedReception>,
    grid: Vec<f64>,
    grid_pos: usize,
    sink_rank_samples: Vec<Vec<usize>>,
}

/// Seed of replication `r`.
pub(crate) fn replication_seed(seed: u64, r: u64) -> u64 {
    seed ^ r
}

pub(crate) fn simulate(cfg: &SimConfig, replication: u64) -> Result<SimTrace> {
    let ctx = FieldContext::with_order(cfg.field_order)?;
    let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(cfg.seed, replication));
    let session = Session::source_init(cfg.k, cfg.payload_len, ctx.clone(), &mut rng)?;
    let n = cfg.network.node_count();
    let mut is_sink = vec![None; n];
    for (i, s) in cfg.sinks.iter().enumerate() {
        is_sink[s.node].get_or_insert(i);
    }
    let memories = (0..n)
        .map(|v| {
            if v == cfg.source {
                session.source_memory(v)
            } else {
                let prune = is_sink[v].is_some() || cfg.intermediate_prune;
                NodeMemory::new(cfg.k, cfg.payload_len, prune)
            }
        })
        .collect();
    let chains = match &cfg.network {
        Network::Wireline(w) => w.chains().to_vec(),
        Network::Wireless(_) => Vec::new(),
    };
    let mut plans = plans(&cfg.network);
    if let Some(t) = cfg.injection_tilt {
        for p in &mut plans {
            if let Driver::Poisson { rate } = &mut p.driver {
                p.tilted_from = Some(*rate);
                *rate *= t;
            }
        }
    }
    let horizon = match cfg.mode {
        Mode::Block => cfg.sinks.iter().map(|s| s.deadline).fold(0.0, f64::max),
        Mode::Rateless { horizon } => horizon,
    };
    let links = plans.len();
    let grid = cfg
        .tracking
        .as_ref()
        .map(|t| t.grid.clone())
        .unwrap_or_default();
    let mut run = Run {
        cfg,
        ctx,
        session,
        rng,
        queue: EventQueue::default(),
        plans,
        chain_state: Vec::new(),
        chains,
        generation: vec![0; links],
        cursor: vec![0; links],
        slot: 0,
        horizon,
        memories,
        is_sink,
        received: vec![0; cfg.sinks.len()],
        full_rank_time: vec![None; cfg.sinks.len()],
        outcomes: vec![None; cfg.sinks.len()],
        stats: vec![LinkStats::default(); links],
        log: cfg.event_log.then(Vec::new),
        next_packet: 0,
        betas: cfg.tracking.as_ref().map(|_| vec![Vec::new(); n]),
        next_unit: 0,
        tracked: Vec::new(),
        grid,
        grid_pos: 0,
        sink_rank_samples: vec![Vec::new(); cfg.sinks.len()],
    };
    run.start();
    let end_time = run.event_loop();
    run.finish(replication, end_time)
}

impl Run<'_> {
    fn start(&mut self) {
        self.chain_state = self
            .chains
            .iter()
            .map(|c| c.sample_stationary(&mut self.rng))
            .collect();
        for c in 0..self.chains.len() {
            self.schedule_jump(c, 0.0);
        }
        let mut slotted = false;
        for a in 0..self.plans.len() {
            if matches!(self.plans[a].driver, Driver::Slotted) {
                slotted = true;
            } else {
                self.schedule_injection(a, 0.0, true);
            }
        }
        if slotted {
            self.push(0.0, EventKind::Slot, 0, 0);
        }
        if self.cfg.mode == Mode::Block {
            for (i, s) in self.cfg.sinks.iter().enumerate() {
                self.queue.push(s.deadline, EventKind::Deadline, i, 0);
            }
        }
    }

    fn push(&mut self, time: f64, kind: EventKind, id: usize, generation: u64) {
        if time <= self.horizon {
            self.queue.push(time, kind, id, generation);
        }
    }

    fn schedule_jump(&mut self, c: usize, now: f64) {
        if let Some((hold, next)) = self.chains[c].sample_jump(self.chain_state[c], &mut self.rng) {
            // the target state rides in the generation field
            self.push(now + hold, EventKind::ChainJump, c, next as u64);
        }
    }

    /// Schedules the next injection on link `a` after `now`. `first` marks
    /// the initial call, where Regular and Trace drivers start at their
    /// first instant rather than after `now`.
    fn schedule_injection(&mut self, a: usize, now: f64, first: bool) {
        let g = self.generation[a];
        let next = match &self.plans[a].driver {
            Driver::Poisson { rate } => exp_gap(*rate, &mut self.rng).map(|d| now + d),
            Driver::Modulated { chain, rates } => {
                exp_gap(rates[self.chain_state[*chain]], &mut self.rng).map(|d| now + d)
            }
            Driver::Regular => {
                if !first {
                    self.cursor[a] += 1;
                }
                Some(self.cursor[a] as f64)
            }
            Driver::Trace(times) => {
                if !first {
                    self.cursor[a] += 1;
                }
                times.get(self.cursor[a]).copied()
            }
            Driver::Slotted => None,
        };
        if let Some(t) = next {
            self.push(t, EventKind::Injection, a, g);
        }
    }

    fn event_loop(&mut self) -> f64 {
        while let Some(ev) = self.queue.pop() {
            let now = ev.time;
            self.sample_grid(now);
            match ev.kind {
                EventKind::ChainJump => {
                    let c = ev.id;
                    self.chain_state[c] = ev.generation as usize;
                    self.schedule_jump(c, now);
                    for a in 0..self.plans.len() {
                        if matches!(self.plans[a].driver, Driver::Modulated { chain, .. } if chain == c)
                        {
                            self.generation[a] += 1;
                            self.schedule_injection(a, now, false);
                        }
                    }
                }
                EventKind::Injection => {
                    if ev.generation != self.generation[ev.id] {
                        continue;
                    }
                    self.inject(ev.id, now);
                    self.schedule_injection(ev.id, now, false);
                }
                EventKind::Slot => {
                    self.slot_boundary(now);
                    self.slot += 1;
                    self.push(self.slot as f64, EventKind::Slot, 0, 0);
                }
                EventKind::Deadline => self.deadline(ev.id, now),
            }
            if self.cfg.stop_when_decoded && self.all_sinks_full_rank() {
                for i in 0..self.cfg.sinks.len() {
                    if self.outcomes[i].is_none() {
                        self.deadline(i, now);
                    }
                }
                return now;
            }
        }
        self.horizon
    }

    fn all_sinks_full_rank(&self) -> bool {
        self.cfg
            .sinks
            .iter()
            .all(|s| self.memories[s.node].is_full_rank())
    }

    fn sample_grid(&mut self, now: f64) {
        while self.grid_pos < self.grid.len() && self.grid[self.grid_pos] < now {
            for (i, s) in self.cfg.sinks.iter().enumerate() {
                self.sink_rank_samples[i].push(self.memories[s.node].rank());
            }
            self.grid_pos += 1;
        }
    }

    fn record(&mut self, time: f64, kind: LogKind, link: Option<usize>, node: usize, packet: Option<u64>) {
        if let Some(log) = &mut self.log {
            log.push(LogRecord {
                time,
                kind,
                link,
                node,
                packet,
                rank_after: self.memories[node].rank(),
            });
        }
    }

    /// Common start of every transmission: counts it and reports whether
    /// the transmitter has anything to send.
    fn begin(&mut self, a: usize, now: f64) -> Option<u64> {
        self.stats[a].injections += 1;
        let id = self.next_packet;
        self.next_packet += 1;
        let from = self.plans[a].from;
        if self.memories[from].is_empty() {
            self.stats[a].skipped += 1;
            self.record(now, LogKind::Skip, Some(a), from, Some(id));
            return None;
        }
        Some(id)
    }

    fn lose(&mut self, a: usize, now: f64, id: u64) {
        self.stats[a].lost += 1;
        let from = self.plans[a].from;
        self.record(now, LogKind::Loss, Some(a), from, Some(id));
    }

    fn inject(&mut self, a: usize, now: f64) {
        let Some(id) = self.begin(a, now) else {
            return;
        };
        let set = match &self.plans[a].delivery {
            Delivery::Wire { to, loss } => {
                let eps = match loss {
                    WireLoss::None => 0.0,
                    WireLoss::Iid(e) => *e,
                    WireLoss::Markov { chain, eps } => eps[self.chain_state[*chain]],
                };
                if eps > 0.0 && self.rng.gen_bool(eps.min(1.0)) {
                    NodeSet::empty()
                } else {
                    NodeSet::singleton(*to)
                }
            }
            Delivery::Broadcast(probs) => {
                let u: f64 = self.rng.gen();
                let mut acc = 0.0;
                let mut set = NodeSet::empty();
                for &(k, p) in probs {
                    acc += p;
                    if u < acc {
                        set = k;
                        break;
                    }
                }
                set
            }
            Delivery::Aloha => unreachable!("Aloha hyperarcs transmit on slot boundaries"),
        };
        if set.is_empty() {
            self.lose(a, now, id);
        } else {
            self.deliver(a, now, id, set);
        }
    }

    fn slot_boundary(&mut self, now: f64) {
        let Network::Wireless(w) = &self.cfg.network else {
            return;
        };
        for (a, set) in w.sample_aloha_slot(&mut self.rng) {
            let Some(id) = self.begin(a, now) else {
                continue;
            };
            if set.is_empty() {
                self.lose(a, now, id);
            } else {
                self.deliver(a, now, id, set);
            }
        }
    }

    fn deliver(&mut self, a: usize, now: f64, id: u64, set: NodeSet) {
        let from = self.plans[a].from;
        let (packet, coefficients): (Packet, _) = self.memories[from]
            .encode_with_coefficients(&self.ctx, &mut self.rng, from, now)
            .expect("transmitter memory is nonempty");
        let beta = self.betas.as_ref().map(|betas| {
            Rc::new(if from == self.cfg.source {
                self.next_unit += 1;
                Beta::Unit(self.next_unit - 1)
            } else {
                combine(&self.ctx, &betas[from], &coefficients)
            })
        });
        let st = &mut self.stats[a];
        st.received += 1;
        st.last_reception = Some(now);
        match st.by_set.binary_search_by_key(&set, |&(k, _)| k) {
            Ok(i) => st.by_set[i].1 += 1,
            Err(i) => st.by_set.insert(i, (set, 1)),
        }
        for j in set.iter() {
            let r = self.memories[j]
                .receive(&self.ctx, packet.clone())
                .expect("packet dimensions match the session");
            if let (Some(betas), Some(b), Reception::Stored) = (&mut self.betas, &beta, r) {
                betas[j].push(b.clone());
            }
            if let Some(i) = self.is_sink[j] {
                self.received[i] += 1;
                if self.full_rank_time[i].is_none() && self.memories[j].is_full_rank() {
                    self.full_rank_time[i] = Some(now);
                }
            }
            self.record(now, LogKind::Reception, Some(a), j, Some(id));
        }
        // a node listed twice in `sinks` shares the first entry's counters
        if let Some(b) = beta {
            self.tracked.push(TrackedReception {
                time: now,
                link: a,
                set,
                beta: b,
            });
        }
    }

    fn decoded(&self, node: usize) -> bool {
        let m = &self.memories[node];
        match self.cfg.decode_check {
            DecodeCheck::RankOnly => m.is_full_rank(),
            DecodeCheck::Full => m
                .try_decode(&self.ctx)
                .is_some_and(|w| w == self.session.messages()),
        }
    }

    fn outcome(&self, i: usize, deadline: Option<f64>) -> SinkOutcome {
        let node = self.cfg.sinks[i].node;
        let first = self.is_sink[node].expect("sink registered");
        SinkOutcome {
            node,
            deadline,
            decoded: self.decoded(node),
            rank: self.memories[node].rank(),
            received: self.received[first],
            full_rank_time: self.full_rank_time[first],
        }
    }

    fn deadline(&mut self, i: usize, now: f64) {
        if self.outcomes[i].is_some() {
            return;
        }
        let o = self.outcome(i, Some(self.cfg.sinks[i].deadline));
        let kind = if o.decoded {
            LogKind::DecodeSuccess
        } else {
            LogKind::DecodeFailure
        };
        self.record(now, kind, None, o.node, None);
        self.outcomes[i] = Some(o);
    }

    fn finish(mut self, replication: u64, end_time: f64) -> Result<SimTrace> {
        self.sample_grid(f64::INFINITY);
        let sinks: Vec<SinkOutcome> = (0..self.cfg.sinks.len())
            .map(|i| match self.outcomes[i].take() {
                Some(o) => o,
                None => {
                    let deadline = (self.cfg.mode == Mode::Block).then(|| self.cfg.sinks[i].deadline);
                    self.outcome(i, deadline)
                }
            })
            .collect();
        let log_weight = match self.cfg.injection_tilt {
            Some(tilt) => self
                .plans
                .iter()
                .zip(&self.stats)
                .filter_map(|(p, s)| p.tilted_from.map(|r| (r, s.injections)))
                .map(|(r, n)| -(n as f64) * tilt.ln() - r * (1.0 - tilt) * end_time)
                .sum(),
            None => 0.0,
        };
        let innovation = match &self.cfg.tracking {
            Some(t) => {
                let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(self.cfg.seed, replication));
                rng.set_stream(1);
                Some(tracker::replay(
                    t,
                    &self.cfg.network,
                    &self.ctx,
                    &self.tracked,
                    self.sink_rank_samples,
                    &mut rng,
                )?)
            }
            None => None,
        };
        Ok(SimTrace {
            replication,
            links: self.stats,
            sinks,
            final_rank: self.memories.iter().map(NodeMemory::rank).collect(),
            end_time,
            log_weight,
            events: self.log,
            innovation,
        })
    }
}

fn exp_gap<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Option<f64> {
    (rate > 0.0).then(|| Exp::new(rate).expect("positive rate").sample(rng))
}
