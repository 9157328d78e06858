use crate::error::{domain, Error, Result};
use crate::Real;

/// A set of node indices below 64, stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeSet(pub u64);

impl NodeSet {
    pub const MAX_NODES: usize = 64;

    pub const fn empty() -> Self {
        NodeSet(0)
    }

    pub fn singleton(i: usize) -> Self {
        debug_assert!(i < Self::MAX_NODES);
        NodeSet(1 << i)
    }

    pub fn contains(self, i: usize) -> bool {
        i < Self::MAX_NODES && self.0 >> i & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < Self::MAX_NODES);
        self.0 |= 1 << i;
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: NodeSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: NodeSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn union(self, other: NodeSet) -> NodeSet {
        NodeSet(self.0 | other.0)
    }

    pub fn minus(self, other: NodeSet) -> NodeSet {
        NodeSet(self.0 & !other.0)
    }

    /// Members in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// All nonempty subsets, in increasing bitmask order.
    pub fn nonempty_subsets(self) -> impl Iterator<Item = NodeSet> {
        let full = self.0;
        let mut sub: u64 = 0;
        let mut done = full == 0;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            // next subset of `full` in increasing order
            sub = (sub.wrapping_sub(full)) & full;
            if sub == 0 {
                done = true;
                None
            } else {
                Some(NodeSet(sub))
            }
        })
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = NodeSet::empty();
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl std::fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A lossy point-to-point arc with average reception rate `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct Link<T> {
    pub from: usize,
    pub to: usize,
    pub z: T,
}

/// A lossy wireline network `(G, z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateGraph<T> {
    nodes: usize,
    arcs: Vec<Link<T>>,
}

impl<T: Real> RateGraph<T> {
    pub fn new(nodes: usize, arcs: Vec<Link<T>>) -> Result<Self> {
        for (a, l) in arcs.iter().enumerate() {
            if l.from >= nodes || l.to >= nodes {
                return domain(format!("arc {a} references a node outside 0..{nodes}"));
            }
            if l.from == l.to {
                return domain(format!("arc {a} is a self-loop at node {}", l.from));
            }
            if !(l.z >= T::zero()) || !l.z.is_finite() {
                return domain(format!("arc {a} has invalid rate {}", l.z));
            }
        }
        Ok(Self { nodes, arcs })
    }

    /// Builds a graph from `(from, to, z)` triples, sizing it to the largest index.
    pub fn from_triples(triples: &[(usize, usize, f64)]) -> Result<Self> {
        let nodes = triples
            .iter()
            .map(|&(i, j, _)| i.max(j) + 1)
            .max()
            .unwrap_or(0);
        Self::new(
            nodes,
            triples
                .iter()
                .map(|&(from, to, z)| Link {
                    from,
                    to,
                    z: crate::lit(z),
                })
                .collect(),
        )
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn arcs(&self) -> &[Link<T>] {
        &self.arcs
    }

    /// Sum of `z_ij` over forward arcs of the cut.
    pub fn forward_capacity(&self, inside: &[bool]) -> T {
        self.arcs
            .iter()
            .filter(|l| inside[l.from] && !inside[l.to])
            .map(|l| l.z)
            .sum()
    }
}

/// A lossy broadcast hyperarc `(i, J)` with rates `z_iJK` for the nonempty
/// receiver sets `K` it reaches.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperarc<T> {
    pub from: usize,
    pub to: NodeSet,
    pub rates: Vec<(NodeSet, T)>,
}

impl<T: Real> Hyperarc<T> {
    pub fn rate(&self, k: NodeSet) -> T {
        self.rates
            .iter()
            .filter(|(s, _)| *s == k)
            .map(|&(_, z)| z)
            .sum()
    }

    /// Total reception rate, counting each packet once.
    pub fn total_rate(&self) -> T {
        self.rates.iter().map(|&(_, z)| z).sum()
    }

    /// Right-hand side of the per-subset flow constraint: the rate of packets
    /// reaching at least one node of `k`.
    pub fn reach_rate(&self, k: NodeSet) -> T {
        self.rates
            .iter()
            .filter(|(l, _)| l.intersects(k))
            .map(|&(_, z)| z)
            .sum()
    }
}

/// A lossy wireless network `(H, z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateHypergraph<T> {
    nodes: usize,
    hyperarcs: Vec<Hyperarc<T>>,
}

impl<T: Real> RateHypergraph<T> {
    pub fn new(nodes: usize, hyperarcs: Vec<Hyperarc<T>>) -> Result<Self> {
        if nodes > NodeSet::MAX_NODES {
            return Err(Error::Guard(format!(
                "hypergraphs are limited to {} nodes, got {nodes}",
                NodeSet::MAX_NODES
            )));
        }
        let all = NodeSet(if nodes == 64 { u64::MAX } else { (1u64 << nodes) - 1 });
        let mut out = Vec::with_capacity(hyperarcs.len());
        for (a, h) in hyperarcs.into_iter().enumerate() {
            if h.from >= nodes || !h.to.is_subset_of(all) {
                return domain(format!("hyperarc {a} references a node outside 0..{nodes}"));
            }
            if h.to.is_empty() {
                return domain(format!("hyperarc {a} has an empty receiver set"));
            }
            if h.to.contains(h.from) {
                return domain(format!("hyperarc {a} lists its own transmitter as a receiver"));
            }
            let mut rates: Vec<(NodeSet, T)> = Vec::new();
            for (k, z) in h.rates {
                if k.is_empty() || !k.is_subset_of(h.to) {
                    return domain(format!(
                        "hyperarc {a}: reception set {k:?} is not a nonempty subset of {:?}",
                        h.to
                    ));
                }
                if !(z >= T::zero()) || !z.is_finite() {
                    return domain(format!("hyperarc {a}: invalid rate {z} for set {k:?}"));
                }
                match rates.iter_mut().find(|(s, _)| *s == k) {
                    Some(e) => e.1 = e.1 + z,
                    None => rates.push((k, z)),
                }
            }
            rates.sort_by_key(|&(k, _)| k);
            out.push(Hyperarc {
                from: h.from,
                to: h.to,
                rates,
            });
        }
        Ok(Self {
            nodes,
            hyperarcs: out,
        })
    }

    /// Views each arc `(i, j)` as the hyperarc `(i, {j})`.
    pub fn from_graph(g: &RateGraph<T>) -> Result<Self> {
        Self::new(
            g.node_count(),
            g.arcs()
                .iter()
                .map(|l| Hyperarc {
                    from: l.from,
                    to: NodeSet::singleton(l.to),
                    rates: vec![(NodeSet::singleton(l.to), l.z)],
                })
                .collect(),
        )
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn hyperarcs(&self) -> &[Hyperarc<T>] {
        &self.hyperarcs
    }

    /// Sum over forward hyperarcs of the rates of packets reaching a node outside the cut.
    pub fn forward_capacity(&self, inside: &[bool]) -> T {
        let q: NodeSet = (0..self.nodes).filter(|&i| inside[i]).collect();
        self.hyperarcs
            .iter()
            .filter(|h| q.contains(h.from) && !h.to.is_subset_of(q))
            .flat_map(|h| h.rates.iter())
            .filter(|(k, _)| !k.is_subset_of(q))
            .map(|&(_, z)| z)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodeset_basics() {
        let s: NodeSet = [3, 1, 5].into_iter().collect();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![1, 3, 5]);
        assert_eq!(s.len(), 3);
        assert!(NodeSet::singleton(3).is_subset_of(s));
        let subs: Vec<NodeSet> = s.nonempty_subsets().collect();
        assert_eq!(subs.len(), 7);
        assert!(subs.iter().all(|k| k.is_subset_of(s) && !k.is_empty()));
        assert!(subs.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(NodeSet::empty().nonempty_subsets().count(), 0);
    }

    #[test]
    fn graph_validation() {
        assert!(RateGraph::<f64>::from_triples(&[(0, 0, 1.0)]).is_err());
        assert!(RateGraph::<f64>::from_triples(&[(0, 1, -1.0)]).is_err());
        assert!(RateGraph::<f64>::from_triples(&[(0, 1, f64::NAN)]).is_err());
        let g = RateGraph::<f64>::from_triples(&[(0, 1, 1.0), (1, 2, 0.5)]).unwrap();
        assert_eq!(g.node_count(), 3);
    }

    #[test]
    fn hypergraph_validation() {
        let h = |from, to: &[usize], rates: Vec<(Vec<usize>, f64)>| Hyperarc {
            from,
            to: to.iter().copied().collect(),
            rates: rates
                .into_iter()
                .map(|(k, z)| (k.into_iter().collect(), z))
                .collect(),
        };
        assert!(RateHypergraph::new(3, vec![h(0, &[], vec![])]).is_err());
        assert!(RateHypergraph::new(3, vec![h(0, &[0, 1], vec![])]).is_err());
        assert!(RateHypergraph::new(3, vec![h(0, &[1], vec![(vec![2], 0.1)])]).is_err());
        assert!(RateHypergraph::new(3, vec![h(0, &[1], vec![(vec![], 0.1)])]).is_err());
        assert!(RateHypergraph::<f64>::new(65, vec![]).is_err());
        let g = RateHypergraph::new(3, vec![h(0, &[1, 2], vec![(vec![1], 0.1), (vec![1], 0.2)])])
            .unwrap();
        assert!((g.hyperarcs()[0].rate(NodeSet::singleton(1)) - 0.3).abs() < 1e-15);
    }
}
