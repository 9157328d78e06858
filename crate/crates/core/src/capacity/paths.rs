use super::flow::{FlowArc, FlowSolution};
use crate::error::{Error, Result};
use crate::{tolerance, Real};

/// One source-sink path `p_m` carrying rate `R_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowPath<T> {
    /// Node sequence from source to sink.
    pub nodes: Vec<usize>,
    /// Indices into the flow's arc list, one per hop.
    pub arcs: Vec<usize>,
    /// The underlying arc or hyperarc of each hop.
    pub links: Vec<usize>,
    pub rate: T,
}

/// A conformal decomposition of an acyclic flow into paths.
#[derive(Clone, Debug, PartialEq)]
pub struct PathDecomposition<T> {
    pub source: usize,
    pub sink: usize,
    pub paths: Vec<FlowPath<T>>,
}

impl<T: Real> PathDecomposition<T> {
    pub fn total_rate(&self) -> T {
        self.paths.iter().map(|p| p.rate).sum()
    }

    /// Total path load on each arc of a flow with `arc_count` arcs.
    pub fn arc_loads(&self, arc_count: usize) -> Vec<T> {
        let mut load = vec![T::zero(); arc_count];
        for p in &self.paths {
            for &a in &p.arcs {
                load[a] = load[a] + p.rate;
            }
        }
        load
    }
}

fn out_lists(nodes: usize, arcs: &[FlowArc]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); nodes];
    for (a, arc) in arcs.iter().enumerate() {
        out[arc.from].push(a);
    }
    // smallest head first, then arc index
    for list in &mut out {
        list.sort_by_key(|&a| (arcs[a].to, a));
    }
    out
}

/// Arcs of some directed cycle in the support `{a : flow[a] > tol}`, found by
/// a deterministic DFS, or `None` if the support is acyclic.
fn find_cycle<T: Real>(nodes: usize, arcs: &[FlowArc], flow: &[T]) -> Option<Vec<usize>> {
    let tol = tolerance::<T>();
    let out = out_lists(nodes, arcs);
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; nodes];
    let mut via: Vec<Option<usize>> = vec![None; nodes];
    for root in 0..nodes {
        if state[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        state[root] = 1;
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if let Some(&a) = out[u].get(*next) {
                *next += 1;
                if flow[a] <= tol {
                    continue;
                }
                let v = arcs[a].to;
                match state[v] {
                    0 => {
                        state[v] = 1;
                        via[v] = Some(a);
                        stack.push((v, 0));
                    }
                    1 => {
                        // walk back from u to v
                        let mut cycle = vec![a];
                        let mut w = u;
                        while w != v {
                            let b = via[w].expect("tree arc on stack");
                            cycle.push(b);
                            w = arcs[b].from;
                        }
                        cycle.reverse();
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                state[u] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// Cancels flow around directed cycles until the support is acyclic. The
/// flow value and conservation are unchanged.
pub fn remove_cycles<T: Real>(flow: &FlowSolution<T>) -> FlowSolution<T> {
    let mut out = flow.clone();
    while let Some(cycle) = find_cycle(out.nodes, &out.arcs, &out.flow) {
        let delta = cycle
            .iter()
            .map(|&a| out.flow[a])
            .fold(T::infinity(), T::min);
        for &a in &cycle {
            out.flow[a] = out.flow[a] - delta;
        }
        // the bottleneck arc leaves the support exactly
        for &a in &cycle {
            if out.flow[a] <= tolerance::<T>() {
                out.flow[a] = T::zero();
            }
        }
    }
    out
}

/// Splits an acyclic flow into source-sink paths by repeated bottleneck
/// extraction, always stepping to the smallest-numbered next node.
pub fn decompose_paths<T: Real>(flow: &FlowSolution<T>) -> Result<PathDecomposition<T>> {
    if let Some(cycle) = find_cycle(flow.nodes, &flow.arcs, &flow.flow) {
        return Err(Error::Cyclic(flow.arcs[cycle[0]].from));
    }
    let tol = tolerance::<T>();
    let out = out_lists(flow.nodes, &flow.arcs);
    let mut residual = flow.flow.clone();
    let mut paths = Vec::new();
    let (s, t) = (flow.source, flow.sink);
    if s == t {
        return Ok(PathDecomposition {
            source: s,
            sink: t,
            paths,
        });
    }
    loop {
        let mut nodes = vec![s];
        let mut hops = Vec::new();
        let mut u = s;
        while u != t {
            match out[u].iter().find(|&&a| residual[a] > tol) {
                Some(&a) => {
                    hops.push(a);
                    u = flow.arcs[a].to;
                    nodes.push(u);
                }
                None => break,
            }
        }
        if u != t || hops.is_empty() {
            break;
        }
        let rate = hops
            .iter()
            .map(|&a| residual[a])
            .fold(T::infinity(), T::min);
        for &a in &hops {
            residual[a] = residual[a] - rate;
            if residual[a] <= tol {
                residual[a] = T::zero();
            }
        }
        if rate >= tol {
            paths.push(FlowPath {
                nodes,
                links: hops.iter().map(|&a| flow.arcs[a].link).collect(),
                arcs: hops,
                rate,
            });
        }
    }
    Ok(PathDecomposition {
        source: s,
        sink: t,
        paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::flow::max_flow_wireline;
    use crate::capacity::graph::RateGraph;
    use proptest::prelude::*;

    fn flow_on(triples: &[(usize, usize, f64)], flow: &[f64], s: usize, t: usize) -> FlowSolution<f64> {
        let g = RateGraph::<f64>::from_triples(triples).unwrap();
        let mut f = max_flow_wireline(&g, s, t, Some(0.0));
        f.flow = flow.to_vec();
        f.value = f.source_outflow();
        f
    }

    #[test]
    fn acyclic_flow_is_unchanged() {
        let f = flow_on(&[(0, 1, 1.0), (1, 2, 1.0)], &[0.5, 0.5], 0, 2);
        assert_eq!(remove_cycles(&f), f);
    }

    #[test]
    fn superimposed_cycle_is_removed() {
        // path 0-1-2-3 at 0.5, plus cycle 1-2-4-1 at 0.2
        let triples = [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (2, 4, 1.0), (4, 1, 1.0)];
        let f = flow_on(&triples, &[0.5, 0.7, 0.5, 0.2, 0.2], 0, 3);
        assert!(f.conservation_residual() < 1e-12);
        assert!(decompose_paths(&f).is_err());
        let g = remove_cycles(&f);
        assert_eq!(g.value, f.value);
        assert!(g.conservation_residual() < 1e-12);
        assert!(find_cycle(g.nodes, &g.arcs, &g.flow).is_none());
        assert!((g.flow[1] - 0.5).abs() < 1e-12);
        assert_eq!(g.flow[3], 0.0);
    }

    #[test]
    fn single_path_and_diamond() {
        let f = flow_on(&[(0, 1, 1.0), (1, 2, 1.0)], &[0.5, 0.5], 0, 2);
        let d = decompose_paths(&f).unwrap();
        assert_eq!(d.paths.len(), 1);
        assert_eq!(d.paths[0].nodes, vec![0, 1, 2]);
        assert_eq!(d.paths[0].rate, 0.5);

        let g = RateGraph::<f64>::from_triples(&[(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)])
            .unwrap();
        let d = decompose_paths(&max_flow_wireline(&g, 0, 3, None)).unwrap();
        assert_eq!(d.paths.len(), 2);
        assert_eq!(d.paths[0].nodes, vec![0, 1, 3]);
        assert_eq!(d.paths[1].nodes, vec![0, 2, 3]);
        assert!(d.paths.iter().all(|p| p.rate == 1.0));
        assert_eq!(d.paths[1].links, vec![1, 3]);
    }

    fn random_graph() -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
        prop::collection::vec((0usize..6, 0usize..6, 0.0f64..2.0), 1..15).prop_map(|v| {
            v.into_iter().filter(|&(i, j, _)| i != j).collect::<Vec<_>>()
        })
    }

    proptest! {
        #[test]
        fn decomposition_reconstructs_flow(arcs in random_graph()) {
            prop_assume!(!arcs.is_empty());
            let g = RateGraph::<f64>::from_triples(&arcs).unwrap();
            let t = g.node_count() - 1;
            prop_assume!(t > 0);
            let f = remove_cycles(&max_flow_wireline(&g, 0, t, None));
            prop_assert!(f.conservation_residual() < 1e-9);
            let d = decompose_paths(&f).unwrap();
            prop_assert!(d.paths.len() <= f.arcs.len());
            prop_assert!((d.total_rate() - f.value).abs() < 1e-9);
            let load = d.arc_loads(f.arcs.len());
            for (a, &l) in load.iter().enumerate() {
                prop_assert!(l <= f.flow[a] + 1e-9);
                prop_assert!((l - f.flow[a]).abs() < 1e-9);
            }
            for p in &d.paths {
                let mut seen = p.nodes.clone();
                seen.sort_unstable();
                seen.dedup();
                prop_assert_eq!(seen.len(), p.nodes.len());
            }
        }

        #[test]
        fn cycle_removal_keeps_conservation(arcs in random_graph(), extra in 0.0f64..1.0) {
            prop_assume!(!arcs.is_empty());
            let g = RateGraph::<f64>::from_triples(&arcs).unwrap();
            let t = g.node_count() - 1;
            prop_assume!(t > 0);
            let mut f = max_flow_wireline(&g, 0, t, None);
            // superimpose a cycle along the first two arcs closed by a third, if present
            if let Some(c) = find_cycle(f.nodes, &f.arcs, &vec![1.0; f.arcs.len()]) {
                for &a in &c {
                    f.flow[a] += extra;
                }
            }
            let r = remove_cycles(&f);
            prop_assert!(r.conservation_residual() < 1e-9);
            prop_assert!((r.source_outflow() - f.value).abs() < 1e-9);
            prop_assert!(find_cycle(r.nodes, &r.arcs, &r.flow).is_none());
        }
    }
}
