use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// What an event does. The declaration order is the tie-break priority for
/// events at the same instant: chain state changes apply first, then
/// injections and Aloha slots, and decoding deadlines last.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum EventKind {
    ChainJump,
    Injection,
    Slot,
    Deadline,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Event {
    pub time: f64,
    pub kind: EventKind,
    /// Chain, link or sink index, depending on `kind`.
    pub id: usize,
    /// Schedule generation, used to drop superseded injections.
    pub generation: u64,
    seq: u64,
}

impl Event {
    fn key(&self) -> (f64, EventKind, usize, u64) {
        (self.time, self.kind, self.id, self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    }
}

/// Min-queue of events ordered by (time, kind, id, insertion sequence).
#[derive(Default)]
pub(crate) struct EventQueue {
    heap: BinaryHeap<std::cmp::Reverse<Event>>,
    seq: u64,
}

impl EventQueue {
    pub fn push(&mut self, time: f64, kind: EventKind, id: usize, generation: u64) {
        self.seq += 1;
        self.heap.push(std::cmp::Reverse(Event {
            time,
            kind,
            id,
            generation,
            seq: self.seq,
        }));
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|r| r.0)
    }
}
