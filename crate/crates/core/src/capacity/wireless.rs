use super::flow::{edmonds_karp, FlowArc, FlowSolution};
use super::graph::{Link, NodeSet, RateGraph, RateHypergraph};
use super::paths::remove_cycles;
use super::simplex::{LinearProgram, LpOutcome, Sense};
use crate::error::{domain, Error, Result};
use crate::{tolerance, Real};

/// Largest number of per-subset capacity constraints the LP will accept.
pub const MAX_LP_CONSTRAINTS: u64 = 100_000;

/// How hyperarc `(i, J)` splits its receptions among outward neighbours:
/// `weights[j]` is `α^{(j)}_{iJL}` for the reception set `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct Splitting<T> {
    pub set: NodeSet,
    pub weights: Vec<(usize, T)>,
}

/// A flow on a lossy hypergraph: `f_iJj` per hyperarc and outward neighbour,
/// with splitting weights showing the flow fits the reception rates.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperFlow<T> {
    pub nodes: usize,
    pub source: usize,
    pub sink: usize,
    pub value: T,
    /// Per hyperarc: `(j, f_iJj)` for each `j ∈ J`, ascending in `j`.
    pub flows: Vec<Vec<(usize, T)>>,
    /// Per hyperarc: one entry per reception set with `z_iJL` listed.
    pub alpha: Vec<Vec<Splitting<T>>>,
}

impl<T: Real> HyperFlow<T> {
    pub fn flow(&self, hyperarc: usize, j: usize) -> T {
        self.flows[hyperarc]
            .iter()
            .find(|&&(n, _)| n == j)
            .map_or(T::zero(), |&(_, f)| f)
    }

    pub fn alpha(&self, hyperarc: usize, set: NodeSet, j: usize) -> T {
        self.alpha[hyperarc]
            .iter()
            .find(|s| s.set == set)
            .and_then(|s| s.weights.iter().find(|&&(n, _)| n == j))
            .map_or(T::zero(), |&(_, a)| a)
    }

    /// `Σ_{L∋j} α^{(j)}_{iJL} z_iJL`: the rate of receptions on `(i, J)`
    /// assigned to neighbour `j`.
    pub fn selection_capacity(&self, h: &RateHypergraph<T>, hyperarc: usize, j: usize) -> T {
        h.hyperarcs()[hyperarc]
            .rates
            .iter()
            .filter(|(l, _)| l.contains(j))
            .map(|&(l, z)| self.alpha(hyperarc, l, j) * z)
            .sum()
    }

    /// Flattens to an arc flow with one arc `(i, j)` per hyperarc neighbour;
    /// `link` records the hyperarc.
    pub fn to_arc_flow(&self, h: &RateHypergraph<T>) -> FlowSolution<T> {
        let mut arcs = Vec::new();
        let mut flow = Vec::new();
        for (a, fl) in self.flows.iter().enumerate() {
            for &(j, f) in fl {
                arcs.push(FlowArc {
                    from: h.hyperarcs()[a].from,
                    to: j,
                    link: a,
                });
                flow.push(f);
            }
        }
        FlowSolution {
            nodes: self.nodes,
            source: self.source,
            sink: self.sink,
            arcs,
            flow,
            value: self.value,
        }
    }

    /// Largest violation of the per-subset capacity constraints.
    pub fn capacity_violation(&self, h: &RateHypergraph<T>) -> T {
        let mut worst = T::zero();
        for (a, ha) in h.hyperarcs().iter().enumerate() {
            for k in ha.to.nonempty_subsets() {
                let lhs: T = k.iter().map(|j| self.flow(a, j)).sum();
                worst = worst.max(lhs - ha.reach_rate(k));
            }
            for &(_, f) in &self.flows[a] {
                worst = worst.max(-f);
            }
        }
        worst
    }
}

fn check_size<T: Real>(h: &RateHypergraph<T>, s: usize, t: usize) -> Result<()> {
    let n = h.node_count();
    if s >= n || t >= n {
        return domain(format!("terminals ({s}, {t}) outside 0..{n}"));
    }
    if s == t {
        return domain("source and sink coincide");
    }
    let count: u64 = h
        .hyperarcs()
        .iter()
        .map(|a| 1u64.checked_shl(a.to.len() as u32).unwrap_or(u64::MAX))
        .fold(0u64, u64::saturating_add);
    if count > MAX_LP_CONSTRAINTS {
        return Err(Error::Guard(format!(
            "flow LP would need {count} capacity constraints (limit {MAX_LP_CONSTRAINTS})"
        )));
    }
    Ok(())
}

/// Variable layout: one `f_iJj` per hyperarc and `j ∈ J`, optionally
/// followed by the flow value.
fn build_lp<T: Real>(
    h: &RateHypergraph<T>,
    s: usize,
    t: usize,
    fixed_rate: Option<T>,
) -> (LinearProgram<T>, Vec<(usize, usize)>) {
    let vars: Vec<(usize, usize)> = h
        .hyperarcs()
        .iter()
        .enumerate()
        .flat_map(|(a, ha)| ha.to.iter().map(move |j| (a, j)))
        .collect();
    let rate_var = vars.len();
    let mut lp = LinearProgram::new(vars.len() + usize::from(fixed_rate.is_none()));
    if fixed_rate.is_none() {
        lp.objective[rate_var] = -T::one();
    }
    for i in 0..h.node_count() {
        let mut coeffs = Vec::new();
        for (v, &(a, j)) in vars.iter().enumerate() {
            if h.hyperarcs()[a].from == i {
                coeffs.push((v, T::one()));
            }
            if j == i {
                coeffs.push((v, -T::one()));
            }
        }
        let sign = if i == s {
            T::one()
        } else if i == t {
            -T::one()
        } else {
            T::zero()
        };
        match fixed_rate {
            Some(r) => lp.add(coeffs, Sense::Eq, sign * r),
            None => {
                if sign != T::zero() {
                    coeffs.push((rate_var, -sign));
                }
                lp.add(coeffs, Sense::Eq, T::zero());
            }
        }
    }
    let mut base = 0;
    for ha in h.hyperarcs() {
        let js: Vec<usize> = ha.to.iter().collect();
        for k in ha.to.nonempty_subsets() {
            let coeffs = js
                .iter()
                .enumerate()
                .filter(|&(_, &j)| k.contains(j))
                .map(|(p, _)| (base + p, T::one()))
                .collect();
            lp.add(coeffs, Sense::Le, ha.reach_rate(k));
        }
        base += js.len();
    }
    (lp, vars)
}

fn assemble<T: Real>(
    h: &RateHypergraph<T>,
    s: usize,
    t: usize,
    value: T,
    x: &[T],
    vars: &[(usize, usize)],
) -> Result<HyperFlow<T>> {
    let mut flows: Vec<Vec<(usize, T)>> = vec![Vec::new(); h.hyperarcs().len()];
    for (&(a, j), &f) in vars.iter().zip(x) {
        flows[a].push((j, f));
    }
    let mut hf = HyperFlow {
        nodes: h.node_count(),
        source: s,
        sink: t,
        value,
        flows,
        alpha: Vec::new(),
    };
    // cancel circulations so the flow decomposes into paths
    let acyclic = remove_cycles(&hf.to_arc_flow(h));
    for (arc, &f) in acyclic.arcs.iter().zip(&acyclic.flow) {
        if let Some(e) = hf.flows[arc.link].iter_mut().find(|(j, _)| *j == arc.to) {
            e.1 = f;
        }
    }
    hf.alpha = h
        .hyperarcs()
        .iter()
        .zip(&hf.flows)
        .map(|(ha, fl)| splitting_weights(&ha.rates, fl))
        .collect();
    Ok(hf)
}

/// Splitting weights for one hyperarc: route reception rates `z_L` to the
/// neighbours `j ∈ L` so each receives at least `f_j`, by bipartite max-flow.
/// Unused weight is given to the smallest member of `L`.
fn splitting_weights<T: Real>(rates: &[(NodeSet, T)], flows: &[(usize, T)]) -> Vec<Splitting<T>> {
    // nodes: 0 = super source, 1..=L sets, then neighbours, then super sink
    let nl = rates.len();
    let nj = flows.len();
    let sink = 1 + nl + nj;
    let mut links = Vec::new();
    for (l, &(_, z)) in rates.iter().enumerate() {
        links.push(Link {
            from: 0,
            to: 1 + l,
            z,
        });
    }
    let mut pair_arcs = Vec::new();
    for (l, &(set, z)) in rates.iter().enumerate() {
        for (p, &(j, _)) in flows.iter().enumerate() {
            if set.contains(j) {
                pair_arcs.push((l, p, links.len()));
                links.push(Link {
                    from: 1 + l,
                    to: 1 + nl + p,
                    z,
                });
            }
        }
    }
    for (p, &(_, f)) in flows.iter().enumerate() {
        links.push(Link {
            from: 1 + nl + p,
            to: sink,
            z: f.max(T::zero()),
        });
    }
    let g = RateGraph::new(sink + 1, links).expect("well-formed bipartite graph");
    let run = edmonds_karp(&g, 0, sink, None);
    rates
        .iter()
        .enumerate()
        .map(|(l, &(set, z))| {
            let mut weights: Vec<(usize, T)> = set.iter().map(|j| (j, T::zero())).collect();
            if z > T::zero() {
                for &(pl, p, arc) in &pair_arcs {
                    if pl == l {
                        let j = flows[p].0;
                        let w = weights.iter_mut().find(|(n, _)| *n == j).expect("j in L");
                        w.1 = run.flow[arc] / z;
                    }
                }
            }
            let used: T = weights.iter().map(|&(_, a)| a).sum();
            weights[0].1 = weights[0].1 + (T::one() - used).max(T::zero());
            Splitting { set, weights }
        })
        .collect()
}

/// A flow of value `rate` satisfying conservation and the per-subset
/// capacity constraints, or `None` if no such flow exists.
pub fn feasible_flow_wireless<T: Real>(
    h: &RateHypergraph<T>,
    s: usize,
    t: usize,
    rate: T,
) -> Result<Option<HyperFlow<T>>> {
    check_size(h, s, t)?;
    if !(rate >= T::zero()) || !rate.is_finite() {
        return domain(format!("target rate {rate} must be finite and nonnegative"));
    }
    let (lp, vars) = build_lp(h, s, t, Some(rate));
    match lp.solve()? {
        LpOutcome::Optimal { x, .. } => assemble(h, s, t, rate, &x, &vars).map(Some),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => unreachable!("feasibility LP has a zero objective"),
    }
}

/// Maximum s-t flow on a lossy hypergraph.
pub fn max_flow_wireless<T: Real>(h: &RateHypergraph<T>, s: usize, t: usize) -> Result<HyperFlow<T>> {
    check_size(h, s, t)?;
    let (lp, vars) = build_lp(h, s, t, None);
    match lp.solve()? {
        LpOutcome::Optimal { x, .. } => {
            let value = x[vars.len()];
            let value = if value < tolerance::<T>() { T::zero() } else { value };
            assemble(h, s, t, value, &x[..vars.len()], &vars)
        }
        LpOutcome::Infeasible | LpOutcome::Unbounded => {
            unreachable!("zero flow is feasible and capacities are finite")
        }
    }
}
