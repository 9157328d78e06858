use super::flow::edmonds_karp;
use super::graph::{RateGraph, RateHypergraph};
use crate::error::{domain, Error, Result};
use crate::Real;

/// Node count above which exhaustive cut enumeration is refused.
pub const MAX_ENUMERATION_NODES: usize = 20;

/// An s-t cut `Q` (containing s, not t) and its forward capacity.
#[derive(Clone, Debug, PartialEq)]
pub struct Cut<T> {
    pub members: Vec<usize>,
    pub value: T,
}

/// Networks whose s-t cuts have a forward capacity.
pub trait CutNetwork<T: Real> {
    fn node_count(&self) -> usize;

    /// Forward capacity of the cut whose members are flagged in `inside`.
    fn forward_capacity(&self, inside: &[bool]) -> T;

    /// Minimum s-t cut by the network's preferred method.
    fn min_cut(&self, s: usize, t: usize) -> Result<Cut<T>>;
}

impl<T: Real> CutNetwork<T> for RateGraph<T> {
    fn node_count(&self) -> usize {
        RateGraph::node_count(self)
    }

    fn forward_capacity(&self, inside: &[bool]) -> T {
        RateGraph::forward_capacity(self, inside)
    }

    /// Via max-flow/min-cut duality: the cut is the residual reachable set.
    fn min_cut(&self, s: usize, t: usize) -> Result<Cut<T>> {
        check_terminals(RateGraph::node_count(self), s, t)?;
        let run = edmonds_karp(self, s, t, None);
        let members = (0..RateGraph::node_count(self))
            .filter(|&i| run.reachable[i])
            .collect();
        Ok(Cut {
            members,
            value: RateGraph::forward_capacity(self, &run.reachable),
        })
    }
}

impl<T: Real> CutNetwork<T> for RateHypergraph<T> {
    fn node_count(&self) -> usize {
        RateHypergraph::node_count(self)
    }

    fn forward_capacity(&self, inside: &[bool]) -> T {
        RateHypergraph::forward_capacity(self, inside)
    }

    fn min_cut(&self, s: usize, t: usize) -> Result<Cut<T>> {
        min_cut_enumerate(self, s, t)
    }
}

fn check_terminals(n: usize, s: usize, t: usize) -> Result<()> {
    if s >= n || t >= n {
        return domain(format!("terminals ({s}, {t}) outside 0..{n}"));
    }
    if s == t {
        return domain("source and sink coincide");
    }
    Ok(())
}

/// Value of the cut `q`, which must contain `s` and exclude `t`.
pub fn cut_value<T: Real, N: CutNetwork<T> + ?Sized>(
    net: &N,
    q: &[usize],
    s: usize,
    t: usize,
) -> Result<T> {
    let n = net.node_count();
    check_terminals(n, s, t)?;
    let mut inside = vec![false; n];
    for &i in q {
        if i >= n {
            return domain(format!("cut member {i} outside 0..{n}"));
        }
        inside[i] = true;
    }
    if !inside[s] || inside[t] {
        return domain("cut must contain the source and exclude the sink");
    }
    Ok(net.forward_capacity(&inside))
}

/// Minimum s-t cut by enumerating all `2^(n-2)` cuts. The first minimiser in
/// bitmask order over the non-terminal nodes is returned.
pub fn min_cut_enumerate<T: Real, N: CutNetwork<T> + ?Sized>(
    net: &N,
    s: usize,
    t: usize,
) -> Result<Cut<T>> {
    let n = net.node_count();
    check_terminals(n, s, t)?;
    if n > MAX_ENUMERATION_NODES {
        return Err(Error::Guard(format!(
            "cut enumeration over {n} nodes exceeds the {MAX_ENUMERATION_NODES}-node limit"
        )));
    }
    let others: Vec<usize> = (0..n).filter(|&i| i != s && i != t).collect();
    let mut inside = vec![false; n];
    let mut best: Option<(u64, T)> = None;
    for mask in 0u64..(1u64 << others.len()) {
        for (b, &i) in others.iter().enumerate() {
            inside[i] = mask >> b & 1 == 1;
        }
        inside[s] = true;
        inside[t] = false;
        let v = net.forward_capacity(&inside);
        if best.is_none_or(|(_, bv)| v < bv) {
            best = Some((mask, v));
        }
    }
    let (mask, value) = best.expect("at least one cut");
    let mut members: Vec<usize> = others
        .iter()
        .enumerate()
        .filter(|(b, _)| mask >> b & 1 == 1)
        .map(|(_, &i)| i)
        .collect();
    members.push(s);
    members.sort_unstable();
    Ok(Cut { members, value })
}

/// Per-sink min-cut capacities `C_t`, each computed independently.
pub fn multicast_region<T: Real, N: CutNetwork<T> + ?Sized>(
    net: &N,
    s: usize,
    sinks: &[usize],
) -> Result<Vec<(usize, Cut<T>)>> {
    if sinks.is_empty() {
        return domain("multicast needs at least one sink");
    }
    sinks
        .iter()
        .map(|&t| net.min_cut(s, t).map(|c| (t, c)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::graph::{Hyperarc, NodeSet};

    fn tandem(z: &[f64]) -> RateGraph<f64> {
        let triples: Vec<_> = z.iter().enumerate().map(|(i, &z)| (i, i + 1, z)).collect();
        RateGraph::from_triples(&triples).unwrap()
    }

    #[test]
    fn tandem_cuts() {
        let g = tandem(&[1.0, 0.5]);
        assert_eq!(cut_value(&g, &[0], 0, 2).unwrap(), 1.0);
        assert_eq!(cut_value(&g, &[0, 1], 0, 2).unwrap(), 0.5);
        assert!(cut_value(&g, &[1], 0, 2).is_err());
        assert!(cut_value(&g, &[0, 2], 0, 2).is_err());
        assert!(cut_value(&g, &[0], 0, 0).is_err());

        let g = tandem(&[0.9, 0.3, 0.7, 0.4]);
        let c = g.min_cut(0, 4).unwrap();
        assert_eq!(c.value, 0.3);
        assert_eq!(c.members, vec![0, 1]);
        assert_eq!(min_cut_enumerate(&g, 0, 4).unwrap().value, 0.3);
    }

    #[test]
    fn single_arc_into_sink() {
        let g = RateGraph::<f64>::from_triples(&[(0, 1, 3.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(cut_value(&g, &[0, 1], 0, 2).unwrap(), 1.0);
    }

    #[test]
    fn parallel_paths() {
        let g = RateGraph::<f64>::from_triples(&[
            (0, 1, 1.0),
            (1, 3, 2.0),
            (0, 2, 3.0),
            (2, 3, 1.0),
        ])
        .unwrap();
        assert_eq!(min_cut_enumerate(&g, 0, 3).unwrap().value, 2.0);
        assert_eq!(g.min_cut(0, 3).unwrap().value, 2.0);
    }

    #[test]
    fn unreachable_sink_has_zero_cut() {
        let g = RateGraph::<f64>::from_triples(&[(0, 1, 1.0), (2, 1, 1.0)]).unwrap();
        let c = g.min_cut(0, 2).unwrap();
        assert_eq!(c.value, 0.0);
        assert_eq!(c.members, vec![0, 1]);
    }

    #[test]
    fn multicast_examples() {
        // shared bottleneck 0->1 (z=1) feeding sinks 2 and 3
        let g = RateGraph::<f64>::from_triples(&[(0, 1, 1.0), (1, 2, 5.0), (1, 3, 5.0)]).unwrap();
        let r = multicast_region(&g, 0, &[2, 3]).unwrap();
        assert_eq!(r[0].1.value, 1.0);
        assert_eq!(r[1].1.value, 1.0);
        assert_eq!(multicast_region(&g, 0, &[2]).unwrap()[0].1, g.min_cut(0, 2).unwrap());
        assert!(multicast_region(&g, 0, &[]).is_err());

        let g = RateGraph::<f64>::from_triples(&[(0, 1, 2.0), (1, 2, 0.5)]).unwrap();
        let r = multicast_region(&g, 0, &[1, 2]).unwrap();
        assert_eq!((r[0].1.value, r[1].1.value), (2.0, 0.5));
    }

    #[test]
    fn relay_cut_by_hand() {
        // nodes 0,1,2 = paper's 1,2,3; hyperarcs (0,{1,2}) and (1,{2})
        let set = |v: &[usize]| v.iter().copied().collect::<NodeSet>();
        let h = RateHypergraph::new(
            3,
            vec![
                Hyperarc {
                    from: 0,
                    to: set(&[1, 2]),
                    rates: vec![(set(&[1]), 0.25f64), (set(&[2]), 0.05), (set(&[1, 2]), 0.25)],
                },
                Hyperarc {
                    from: 1,
                    to: set(&[2]),
                    rates: vec![(set(&[2]), 0.25)],
                },
            ],
        )
        .unwrap();
        assert!((cut_value(&h, &[0], 0, 2).unwrap() - (0.25 + 0.05 + 0.25)).abs() < 1e-15);
        // Q = {0,1}: only sets containing node 2 cross
        assert!((cut_value(&h, &[0, 1], 0, 2).unwrap() - (0.05 + 0.25 + 0.25)).abs() < 1e-15);
        let c = h.min_cut(0, 2).unwrap();
        assert!((c.value - 0.55).abs() < 1e-15);
    }

    #[test]
    fn enumeration_guard() {
        let triples: Vec<_> = (0..21).map(|i| (i, i + 1, 1.0)).collect();
        let g = RateGraph::<f64>::from_triples(&triples).unwrap();
        assert!(matches!(min_cut_enumerate(&g, 0, 21), Err(Error::Guard(_))));
        assert_eq!(g.min_cut(0, 21).unwrap().value, 1.0);
    }
}
