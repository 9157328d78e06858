use std::collections::VecDeque;

use super::graph::RateGraph;
use crate::{tolerance, Real};

/// One arc of a flow: `link` indexes the arc (wireline) or hyperarc (wireless)
/// the flow rides on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlowArc {
    pub from: usize,
    pub to: usize,
    pub link: usize,
}

/// An s-t flow on a directed multigraph.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowSolution<T> {
    pub nodes: usize,
    pub source: usize,
    pub sink: usize,
    pub arcs: Vec<FlowArc>,
    pub flow: Vec<T>,
    pub value: T,
}

impl<T: Real> FlowSolution<T> {
    /// Largest absolute violation of flow conservation over all nodes.
    pub fn conservation_residual(&self) -> T {
        let mut net = vec![T::zero(); self.nodes];
        for (a, &f) in self.arcs.iter().zip(&self.flow) {
            net[a.from] = net[a.from] + f;
            net[a.to] = net[a.to] - f;
        }
        net.iter()
            .enumerate()
            .map(|(i, &x)| {
                let want = if self.source == self.sink {
                    T::zero()
                } else if i == self.source {
                    self.value
                } else if i == self.sink {
                    -self.value
                } else {
                    T::zero()
                };
                (x - want).abs()
            })
            .fold(T::zero(), T::max)
    }

    /// Net flow leaving the source.
    pub fn source_outflow(&self) -> T {
        self.arcs
            .iter()
            .zip(&self.flow)
            .map(|(a, &f)| {
                if a.from == self.source {
                    f
                } else if a.to == self.source {
                    -f
                } else {
                    T::zero()
                }
            })
            .sum()
    }
}

/// Result of an augmenting-path max-flow run.
pub(crate) struct MaxFlowRun<T> {
    pub flow: Vec<T>,
    pub value: T,
    /// Nodes reachable from the source in the final residual graph.
    pub reachable: Vec<bool>,
}

/// Edmonds-Karp: shortest augmenting paths found by BFS, arcs scanned in
/// index order. Stops once `limit` units have been pushed.
pub(crate) fn edmonds_karp<T: Real>(
    g: &RateGraph<T>,
    s: usize,
    t: usize,
    limit: Option<T>,
) -> MaxFlowRun<T> {
    let n = g.node_count();
    let arcs = g.arcs();
    let tol = tolerance::<T>();
    let mut out_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut in_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, l) in arcs.iter().enumerate() {
        out_adj[l.from].push(a);
        in_adj[l.to].push(a);
    }
    let mut flow = vec![T::zero(); arcs.len()];
    let mut value = T::zero();
    loop {
        // parent[v] = (arc, forward?)
        let mut parent: Vec<Option<(usize, bool)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &out_adj[u] {
                let v = arcs[a].to;
                if !seen[v] && arcs[a].z - flow[a] > tol {
                    seen[v] = true;
                    parent[v] = Some((a, true));
                    queue.push_back(v);
                }
            }
            for &a in &in_adj[u] {
                let v = arcs[a].from;
                if !seen[v] && flow[a] > tol {
                    seen[v] = true;
                    parent[v] = Some((a, false));
                    queue.push_back(v);
                }
            }
        }
        let remaining = limit.map(|r| r - value);
        if !seen[t] || s == t || remaining.is_some_and(|r| r <= tol) {
            return MaxFlowRun {
                flow,
                value,
                reachable: seen,
            };
        }
        let mut bottleneck = remaining.unwrap_or(T::infinity());
        let mut v = t;
        while v != s {
            let (a, fwd) = parent[v].expect("path back to source");
            let (res, prev) = if fwd {
                (arcs[a].z - flow[a], arcs[a].from)
            } else {
                (flow[a], arcs[a].to)
            };
            bottleneck = bottleneck.min(res);
            v = prev;
        }
        let mut v = t;
        while v != s {
            let (a, fwd) = parent[v].expect("path back to source");
            if fwd {
                flow[a] = (flow[a] + bottleneck).min(arcs[a].z);
                v = arcs[a].from;
            } else {
                flow[a] = (flow[a] - bottleneck).max(T::zero());
                v = arcs[a].to;
            }
        }
        value = value + bottleneck;
    }
}

/// Maximum s-t flow on a wireline network, capped at `target` when given.
pub fn max_flow_wireline<T: Real>(
    g: &RateGraph<T>,
    s: usize,
    t: usize,
    target: Option<T>,
) -> FlowSolution<T> {
    let run = edmonds_karp(g, s, t, target);
    FlowSolution {
        nodes: g.node_count(),
        source: s,
        sink: t,
        arcs: g
            .arcs()
            .iter()
            .enumerate()
            .map(|(a, l)| FlowArc {
                from: l.from,
                to: l.to,
                link: a,
            })
            .collect(),
        flow: run.flow,
        value: run.value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let g = RateGraph::<f64>::from_triples(&[(0, 1, 1.0)]).unwrap();
        let f = max_flow_wireline(&g, 0, 1, None);
        assert_eq!(f.value, 1.0);
        assert_eq!(f.flow, vec![1.0]);

        let g = RateGraph::<f64>::from_triples(&[(0, 1, 1.0), (1, 2, 0.5)]).unwrap();
        let f = max_flow_wireline(&g, 0, 2, None);
        assert_eq!(f.value, 0.5);
        assert_eq!(f.flow, vec![0.5, 0.5]);

        // diamond s=0, a=1, b=2, t=3
        let g = RateGraph::<f64>::from_triples(&[
            (0, 1, 1.0),
            (0, 2, 1.0),
            (1, 3, 1.0),
            (2, 3, 1.0),
        ])
        .unwrap();
        let f = max_flow_wireline(&g, 0, 3, None);
        assert_eq!(f.value, 2.0);
        assert!(f.conservation_residual() < 1e-12);

        let f = max_flow_wireline(&g, 0, 3, Some(1.5));
        assert!((f.value - 1.5).abs() < 1e-12);
        assert!(f.conservation_residual() < 1e-12);
    }

    #[test]
    fn needs_reverse_residual_arc() {
        // The first BFS path 0-1-2-3 must be partly undone via the reverse arc.
        let g = RateGraph::<f64>::from_triples(&[
            (0, 1, 1.0),
            (0, 2, 1.0),
            (1, 2, 1.0),
            (1, 3, 1.0),
            (2, 3, 1.0),
        ])
        .unwrap();
        assert_eq!(max_flow_wireline(&g, 0, 3, None).value, 2.0);
    }

    #[test]
    fn works_in_f32() {
        let g = RateGraph::<f32>::from_triples(&[(0, 1, 0.75), (1, 2, 0.25)]).unwrap();
        assert_eq!(max_flow_wireline(&g, 0, 2, None).value, 0.25f32);
    }
}
