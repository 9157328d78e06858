//! Node-level behaviour of the random linear coding scheme: a source holding
//! K message packets, nodes that store what they receive and emit uniformly
//! random linear combinations of their memory, and sinks that decode by
//! Gaussian elimination once their global encoding vectors reach rank K.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gf::{solve, EchelonBasis, Element, FieldContext, FieldMatrix, Solution};

pub type NodeId = usize;

/// A coded packet: payload plus the global encoding vector carried in its header.
#[derive(Clone, Debug, PartialEq)]
pub struct Packet {
    pub payload: Vec<Element>,
    /// Coefficients over the K message packets.
    pub coding: Vec<Element>,
    pub origin: NodeId,
    pub created: f64,
}

/// Parameters and message set of one coding block.
#[derive(Clone, Debug, PartialEq)]
pub struct Session {
    k: usize,
    payload_len: usize,
    field: FieldContext,
    messages: Vec<Vec<Element>>,
}

impl Session {
    /// Draws K uniformly random message payloads of `payload_len` symbols.
    pub fn source_init<R: Rng + ?Sized>(
        k: usize,
        payload_len: usize,
        field: FieldContext,
        rng: &mut R,
    ) -> Result<Self> {
        if k == 0 || payload_len == 0 {
            return Err(Error::Domain(format!(
                "session needs K >= 1 and payload length >= 1, got K={k}, length={payload_len}"
            )));
        }
        let messages = (0..k)
            .map(|_| (0..payload_len).map(|_| field.random_element(rng)).collect())
            .collect();
        Ok(Self {
            k,
            payload_len,
            field,
            messages,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn payload_len(&self) -> usize {
        self.payload_len
    }

    pub fn field(&self) -> &FieldContext {
        &self.field
    }

    pub fn messages(&self) -> &[Vec<Element>] {
        &self.messages
    }

    /// Source memory: message k stored with the k-th unit encoding vector.
    pub fn source_memory(&self, source: NodeId) -> NodeMemory {
        let mut mem = NodeMemory::new(self.k, self.payload_len, true);
        for (i, w) in self.messages.iter().enumerate() {
            let mut coding = vec![0; self.k];
            coding[i] = 1;
            let stored = mem.receive(
                &self.field,
                Packet {
                    payload: w.clone(),
                    coding,
                    origin: source,
                    created: 0.0,
                },
            );
            debug_assert_eq!(stored, Ok(Reception::Stored));
        }
        mem
    }

    /// Whether `payload = sum_k coding_k * w_k` holds for this packet.
    pub fn is_consistent(&self, p: &Packet) -> bool {
        if p.coding.len() != self.k || p.payload.len() != self.payload_len {
            return false;
        }
        let mut acc = vec![0; self.payload_len];
        for (&g, w) in p.coding.iter().zip(&self.messages) {
            self.field.mul_add_slice(&mut acc, w, g);
        }
        acc == p.payload
    }
}

/// What `receive` did with a packet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reception {
    Stored,
    Discarded,
}

/// Packets held by one node.
///
/// With `prune` set, only packets whose encoding vectors extend the span are
/// kept, so the memory never exceeds K packets.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeMemory {
    k: usize,
    payload_len: usize,
    prune: bool,
    stored: Vec<Packet>,
    span: EchelonBasis,
}

impl NodeMemory {
    pub fn new(k: usize, payload_len: usize, prune: bool) -> Self {
        Self {
            k,
            payload_len,
            prune,
            stored: Vec::new(),
            span: EchelonBasis::new(),
        }
    }

    pub fn stored(&self) -> &[Packet] {
        &self.stored
    }

    pub fn len(&self) -> usize {
        self.stored.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stored.is_empty()
    }

    pub fn prune(&self) -> bool {
        self.prune
    }

    /// Rank of the stored global encoding vectors.
    pub fn rank(&self) -> usize {
        self.span.rank()
    }

    pub fn is_full_rank(&self) -> bool {
        self.span.rank() == self.k
    }

    pub fn receive(&mut self, ctx: &FieldContext, p: Packet) -> Result<Reception> {
        if p.coding.len() != self.k || p.payload.len() != self.payload_len {
            return Err(Error::Dimension(format!(
                "packet has {} coding / {} payload symbols, session expects {} / {}",
                p.coding.len(),
                p.payload.len(),
                self.k,
                self.payload_len
            )));
        }
        let grew = self.span.rank() < self.k && self.span.insert(ctx, &p.coding);
        if grew || !self.prune {
            self.stored.push(p);
            Ok(Reception::Stored)
        } else {
            Ok(Reception::Discarded)
        }
    }

    /// Emits a random linear combination of the stored packets.
    pub fn encode<R: Rng + ?Sized>(
        &self,
        ctx: &FieldContext,
        rng: &mut R,
        origin: NodeId,
        created: f64,
    ) -> Result<Packet> {
        self.encode_with_coefficients(ctx, rng, origin, created)
            .map(|(p, _)| p)
    }

    /// As [`encode`](Self::encode), also returning the coefficient drawn for
    /// each stored packet, in storage order.
    pub fn encode_with_coefficients<R: Rng + ?Sized>(
        &self,
        ctx: &FieldContext,
        rng: &mut R,
        origin: NodeId,
        created: f64,
    ) -> Result<(Packet, Vec<Element>)> {
        if self.stored.is_empty() {
            return Err(Error::EmptyMemory);
        }
        let coefficients: Vec<Element> =
            self.stored.iter().map(|_| ctx.random_element(rng)).collect();
        let mut payload = vec![0; self.payload_len];
        let mut coding = vec![0; self.k];
        for (y, &a) in self.stored.iter().zip(&coefficients) {
            if a != 0 {
                ctx.mul_add_slice(&mut payload, &y.payload, a);
                ctx.mul_add_slice(&mut coding, &y.coding, a);
            }
        }
        Ok((
            Packet {
                payload,
                coding,
                origin,
                created,
            },
            coefficients,
        ))
    }

    /// Recovers the K message payloads if the stored encoding vectors have
    /// rank K; `None` otherwise.
    pub fn try_decode(&self, ctx: &FieldContext) -> Option<Vec<Vec<Element>>> {
        if self.span.rank() < self.k {
            return None;
        }
        let mut basis = EchelonBasis::new();
        let mut chosen = Vec::with_capacity(self.k);
        for p in &self.stored {
            if basis.insert(ctx, &p.coding) {
                chosen.push(p);
                if chosen.len() == self.k {
                    break;
                }
            }
        }
        let a = FieldMatrix::from_rows(
            &chosen.iter().map(|p| p.coding.as_slice()).collect::<Vec<_>>(),
            self.k,
        )
        .ok()?;
        let b = FieldMatrix::from_rows(
            &chosen.iter().map(|p| p.payload.as_slice()).collect::<Vec<_>>(),
            self.payload_len,
        )
        .ok()?;
        match solve(ctx, &a, &b) {
            Ok(Solution::Unique(x)) => Some(x.into_rows()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn source_init_examples() {
        let f = FieldContext::gf256();
        let s = Session::source_init(1, 4, f.clone(), &mut rng(0)).unwrap();
        assert_eq!(s.source_memory(0).rank(), 1);

        let s = Session::source_init(8, 16, f.clone(), &mut rng(1)).unwrap();
        let mem = s.source_memory(0);
        assert_eq!(mem.len(), 8);
        for (i, p) in mem.stored().iter().enumerate() {
            let mut e = vec![0; 8];
            e[i] = 1;
            assert_eq!(p.coding, e);
            assert_eq!(p.payload.len(), 16);
        }
        let again = Session::source_init(8, 16, f.clone(), &mut rng(1)).unwrap();
        assert_eq!(s, again);
        assert!(Session::source_init(0, 1, f.clone(), &mut rng(1)).is_err());
        assert!(Session::source_init(1, 0, f, &mut rng(1)).is_err());
    }

    #[test]
    fn encode_single_packet_memory() {
        let f = FieldContext::gf16();
        let s = Session::source_init(3, 5, f.clone(), &mut rng(2)).unwrap();
        let mut mem = NodeMemory::new(3, 5, true);
        let w1 = s.source_memory(0).stored()[0].clone();
        mem.receive(&f, w1.clone()).unwrap();
        let mut r = rng(3);
        for _ in 0..50 {
            let (p, c) = mem.encode_with_coefficients(&f, &mut r, 1, 0.0).unwrap();
            assert_eq!(p.coding, vec![c[0], 0, 0]);
            let mut expect = w1.payload.clone();
            f.scale_slice(&mut expect, c[0]);
            assert_eq!(p.payload, expect);
        }
        assert_eq!(
            NodeMemory::new(3, 5, true).encode(&f, &mut r, 1, 0.0),
            Err(Error::EmptyMemory)
        );
    }

    #[test]
    fn encoded_vectors_stay_in_span_and_are_consistent() {
        let f = FieldContext::gf256();
        let s = Session::source_init(6, 8, f.clone(), &mut rng(4)).unwrap();
        let src = s.source_memory(0);
        let mut r = rng(5);
        let mut relay = NodeMemory::new(6, 8, false);
        for _ in 0..3 {
            relay.receive(&f, src.encode(&f, &mut r, 0, 0.0).unwrap()).unwrap();
        }
        let mut span = EchelonBasis::new();
        for p in relay.stored() {
            span.insert(&f, &p.coding);
        }
        for _ in 0..100 {
            let p = relay.encode(&f, &mut r, 1, 1.0).unwrap();
            assert!(!span.is_independent(&f, &p.coding));
            assert!(s.is_consistent(&p));
        }
    }

    #[test]
    fn encoded_vectors_uniform_over_span() {
        // Two independent packets over GF(2): four span elements, zero included.
        let f = FieldContext::gf2();
        let mut mem = NodeMemory::new(2, 1, true);
        mem.receive(&f, Packet { payload: vec![1], coding: vec![1, 0], origin: 0, created: 0.0 })
            .unwrap();
        mem.receive(&f, Packet { payload: vec![0], coding: vec![1, 1], origin: 0, created: 0.0 })
            .unwrap();
        let mut counts = std::collections::BTreeMap::new();
        let mut r = rng(6);
        let draws = 40_000;
        for _ in 0..draws {
            *counts.entry(mem.encode(&f, &mut r, 1, 0.0).unwrap().coding).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), 4);
        let expected = draws as f64 / 4.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 3 degrees of freedom, 99.9% quantile
        assert!(chi2 < 16.27, "chi2 = {chi2}");
    }

    #[test]
    fn receive_pruning() {
        let f = FieldContext::gf256();
        let s = Session::source_init(3, 2, f.clone(), &mut rng(7)).unwrap();
        let src = s.source_memory(0);
        let p = src.stored()[1].clone();

        let mut pruned = NodeMemory::new(3, 2, true);
        assert_eq!(pruned.receive(&f, p.clone()).unwrap(), Reception::Stored);
        assert_eq!(pruned.receive(&f, p.clone()).unwrap(), Reception::Discarded);
        assert_eq!(pruned.len(), 1);

        let mut unpruned = NodeMemory::new(3, 2, false);
        unpruned.receive(&f, p.clone()).unwrap();
        assert_eq!(unpruned.receive(&f, p.clone()).unwrap(), Reception::Stored);
        assert_eq!(unpruned.len(), 2);
        assert_eq!(unpruned.rank(), 1);

        for q in src.stored() {
            pruned.receive(&f, q.clone()).unwrap();
        }
        assert_eq!(pruned.len(), 3);
        let mut r = rng(8);
        for _ in 0..20 {
            let x = src.encode(&f, &mut r, 0, 0.0).unwrap();
            assert_eq!(pruned.receive(&f, x).unwrap(), Reception::Discarded);
        }
        assert_eq!(pruned.len(), 3);

        let bad = Packet { payload: vec![0; 2], coding: vec![0; 4], origin: 0, created: 0.0 };
        assert!(matches!(pruned.receive(&f, bad), Err(Error::Dimension(_))));
    }

    #[test]
    fn decode_examples() {
        let f = FieldContext::gf256();
        let s = Session::source_init(1, 3, f.clone(), &mut rng(9)).unwrap();
        let mem = s.source_memory(0);
        assert_eq!(mem.try_decode(&f).unwrap(), s.messages());

        let s = Session::source_init(4, 3, f.clone(), &mut rng(10)).unwrap();
        let src = s.source_memory(0);
        let mut sink = NodeMemory::new(4, 3, true);
        for p in &src.stored()[..3] {
            sink.receive(&f, p.clone()).unwrap();
        }
        assert_eq!(sink.rank(), 3);
        assert!(sink.try_decode(&f).is_none());
    }

    #[test]
    fn decode_round_trip_over_seeds() {
        for (seed, f) in (0..100u64).zip(
            [FieldContext::gf2(), FieldContext::gf16(), FieldContext::gf256()]
                .into_iter()
                .cycle(),
        ) {
            let mut r = rng(seed);
            let k = r.gen_range(1..12);
            let len = r.gen_range(1..10);
            let s = Session::source_init(k, len, f.clone(), &mut r).unwrap();
            let src = s.source_memory(0);
            let mut sink = NodeMemory::new(k, len, true);
            while !sink.is_full_rank() {
                let p = src.encode(&f, &mut r, 0, 0.0).unwrap();
                assert!(s.is_consistent(&p));
                let before = sink.rank();
                sink.receive(&f, p).unwrap();
                assert!(sink.rank() >= before);
            }
            assert_eq!(sink.len(), k);
            assert_eq!(sink.try_decode(&f).unwrap(), s.messages(), "seed {seed}");
        }
    }

    #[test]
    fn innovation_probability_lower_bound() {
        // Sender rank exceeds receiver rank by rho: an encoded packet extends the
        // receiver's span with probability at least 1 - q^-rho.
        let f = FieldContext::gf2();
        let k = 6;
        let s = Session::source_init(k, 1, f.clone(), &mut rng(12)).unwrap();
        let src = s.source_memory(0);
        for rho in 1..=3usize {
            let receiver_rank = 2;
            let mut sender = NodeMemory::new(k, 1, true);
            let mut receiver = NodeMemory::new(k, 1, true);
            for p in &src.stored()[..receiver_rank + rho] {
                sender.receive(&f, p.clone()).unwrap();
            }
            for p in &src.stored()[..receiver_rank] {
                receiver.receive(&f, p.clone()).unwrap();
            }
            let mut r = rng(100 + rho as u64);
            let trials = 10_000;
            let hits = (0..trials)
                .filter(|_| {
                    let x = sender.encode(&f, &mut r, 1, 0.0).unwrap();
                    let mut probe = EchelonBasis::new();
                    for y in receiver.stored() {
                        probe.insert(&f, &y.coding);
                    }
                    probe.is_independent(&f, &x.coding)
                })
                .count();
            let bound = 1.0 - 2f64.powi(-(rho as i32));
            let phat = hits as f64 / trials as f64;
            // one-sided test at 99%: reject only if phat is 2.326 SE below the bound
            let se = (bound * (1.0 - bound) / trials as f64).sqrt();
            assert!(phat >= bound - 2.326 * se, "rho={rho}: {phat} < {bound}");
        }
    }
}
