use rand::Rng;

use super::{HyperarcProcess, WirelessNetwork};
use crate::capacity::NodeSet;
use crate::error::{Error, Result};

/// Largest number of Aloha hyperarcs whose transmit patterns are enumerated.
pub const MAX_ALOHA_HYPERARCS: usize = 20;

/// Reception distribution of an Aloha hyperarc given exactly which other
/// Aloha hyperarcs transmit in the same slot. Missing mass is loss.
#[derive(Clone, Debug, PartialEq)]
pub struct AlohaTableEntry {
    pub others: Vec<usize>,
    pub reception: Vec<(NodeSet, f64)>,
}

impl WirelessNetwork {
    /// Indices of the Aloha hyperarcs, with their transmit probabilities.
    pub fn aloha_hyperarcs(&self) -> Vec<(usize, f64)> {
        self.hyperarcs()
            .iter()
            .enumerate()
            .filter_map(|(a, h)| match h.process {
                HyperarcProcess::Aloha { q, .. } => Some((a, q)),
                _ => None,
            })
            .collect()
    }

    /// Distribution of the reception set of Aloha hyperarc `a` when the
    /// hyperarcs flagged in `transmitting` (which includes `a`) transmit.
    pub(crate) fn aloha_reception_distribution(
        &self,
        a: usize,
        transmitting: &[bool],
    ) -> Vec<(NodeSet, f64)> {
        let h = &self.hyperarcs()[a];
        let HyperarcProcess::Aloha { table, .. } = &h.process else {
            panic!("hyperarc {a} is not an Aloha hyperarc");
        };
        let others: Vec<usize> = (0..transmitting.len())
            .filter(|&b| b != a && transmitting[b])
            .collect();
        if let Some(e) = table.iter().find(|e| {
            let mut o = e.others.clone();
            o.sort_unstable();
            o == others
        }) {
            return e.reception.clone();
        }
        // collision rule
        let active: NodeSet = others.iter().map(|&b| self.hyperarcs()[b].from).collect();
        let k: NodeSet = h
            .to
            .iter()
            .filter(|&j| {
                !self.interferers()[j]
                    .minus(NodeSet::singleton(h.from))
                    .intersects(active)
            })
            .collect();
        if k.is_empty() {
            Vec::new()
        } else {
            vec![(k, 1.0)]
        }
    }

    /// Exact rates `z_iJK = q_iJ p_iJK` for every Aloha hyperarc, by summing
    /// over all transmit patterns. Entries for other hyperarcs are empty.
    pub fn aloha_reception_rates(&self) -> Result<Vec<Vec<(NodeSet, f64)>>> {
        let aloha = self.aloha_hyperarcs();
        if aloha.len() > MAX_ALOHA_HYPERARCS {
            return Err(Error::Guard(format!(
                "{} Aloha hyperarcs exceed the enumeration limit of {MAX_ALOHA_HYPERARCS}",
                aloha.len()
            )));
        }
        let mut rates: Vec<Vec<(NodeSet, f64)>> = vec![Vec::new(); self.hyperarcs().len()];
        let mut transmitting = vec![false; self.hyperarcs().len()];
        for mask in 0u32..(1u32 << aloha.len()) {
            let mut prob = 1.0;
            for (b, &(a, q)) in aloha.iter().enumerate() {
                let on = mask >> b & 1 == 1;
                transmitting[a] = on;
                prob *= if on { q } else { 1.0 - q };
            }
            if prob == 0.0 {
                continue;
            }
            for &(a, _) in &aloha {
                if !transmitting[a] {
                    continue;
                }
                for (k, p) in self.aloha_reception_distribution(a, &transmitting) {
                    match rates[a].iter_mut().find(|(s, _)| *s == k) {
                        Some(e) => e.1 += prob * p,
                        None => rates[a].push((k, prob * p)),
                    }
                }
            }
        }
        for r in &mut rates {
            r.sort_by_key(|&(k, _)| k);
        }
        Ok(rates)
    }

    /// Simulates one slot: which Aloha hyperarcs transmit and the reception
    /// set of each transmission (empty when lost).
    pub fn sample_aloha_slot<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<(usize, NodeSet)> {
        let aloha = self.aloha_hyperarcs();
        let mut transmitting = vec![false; self.hyperarcs().len()];
        for &(a, q) in &aloha {
            transmitting[a] = rng.gen_bool(q);
        }
        aloha
            .iter()
            .filter(|&&(a, _)| transmitting[a])
            .map(|&(a, _)| {
                let dist = self.aloha_reception_distribution(a, &transmitting);
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut k = NodeSet::empty();
                for (s, p) in dist {
                    acc += p;
                    if u < acc {
                        k = s;
                        break;
                    }
                }
                (a, k)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::WirelessHyperarc;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(v: &[usize]) -> NodeSet {
        v.iter().copied().collect()
    }

    fn aloha(from: usize, to: &[usize], q: f64) -> WirelessHyperarc {
        WirelessHyperarc {
            from,
            to: set(to),
            process: HyperarcProcess::Aloha {
                q,
                table: Vec::new(),
            },
        }
    }

    #[test]
    fn lone_transmitter() {
        let n = WirelessNetwork::new(vec![1, 2], vec![aloha(0, &[1], 0.5)], None).unwrap();
        assert_eq!(n.reception_rates(0), &[(set(&[1]), 0.5)]);
    }

    #[test]
    fn two_interfering_links() {
        // 0 -> 1 and 2 -> 3, each receiver hears both transmitters
        let n = WirelessNetwork::new(
            vec![1, 2, 3, 4],
            vec![aloha(0, &[1], 0.5), aloha(2, &[3], 0.5)],
            None,
        )
        .unwrap();
        assert_eq!(n.reception_rates(0), &[(set(&[1]), 0.25)]);
        assert_eq!(n.reception_rates(1), &[(set(&[3]), 0.25)]);
    }

    #[test]
    fn relay_by_pattern_enumeration() {
        let n = WirelessNetwork::aloha_relay(0.5).unwrap();
        // patterns (1 tx?, 2 tx?) each with probability 1/4:
        //   1 only: {2,3};  both: 1 reaches {2} only, 2 reaches nothing;  2 only: {3}
        assert_eq!(n.reception_rates(0), &[(set(&[1]), 0.25), (set(&[1, 2]), 0.25)]);
        assert_eq!(n.reception_rates(1), &[(set(&[2]), 0.25)]);
    }

    #[test]
    fn conditional_table_overrides_collisions() {
        // multipacket reception: when both transmit, node 1 still decodes 0's packet
        let mut arcs = vec![aloha(0, &[1], 0.5), aloha(2, &[1], 0.5)];
        arcs[0].process = HyperarcProcess::Aloha {
            q: 0.5,
            table: vec![AlohaTableEntry {
                others: vec![1],
                reception: vec![(set(&[1]), 0.8)],
            }],
        };
        let n = WirelessNetwork::new(vec![1, 2, 3], arcs, None).unwrap();
        assert!((n.reception_rates(0)[0].1 - (0.25 + 0.25 * 0.8)).abs() < 1e-12);
        assert_eq!(n.reception_rates(1), &[(set(&[1]), 0.25)]);
    }

    #[test]
    fn slot_sampling_matches_enumeration() {
        let n = WirelessNetwork::aloha_relay(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let slots = 100_000;
        let mut count = [0usize; 3];
        for _ in 0..slots {
            for (a, k) in n.sample_aloha_slot(&mut rng) {
                match (a, k) {
                    (0, k) if k == set(&[1]) => count[0] += 1,
                    (0, k) if k == set(&[1, 2]) => count[1] += 1,
                    (1, k) if k == set(&[2]) => count[2] += 1,
                    (_, k) => assert!(k.is_empty(), "unexpected reception {a} {k:?}"),
                }
            }
        }
        for c in count {
            let p = c as f64 / slots as f64;
            let se = (0.25 * 0.75 / slots as f64).sqrt();
            assert!((p - 0.25).abs() < 3.0 * se, "{p}");
        }
    }

    #[test]
    fn enumeration_guard() {
        let labels: Vec<u32> = (0..22).collect();
        let arcs = (0..21).map(|i| aloha(i, &[i + 1], 0.1)).collect();
        assert!(matches!(
            WirelessNetwork::new(labels, arcs, None),
            Err(Error::Guard(_))
        ));
    }
}
