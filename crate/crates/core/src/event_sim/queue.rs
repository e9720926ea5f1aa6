//! Timestamped event queue.
//!
//! Events pop in nondecreasing time order. Ties are broken first by the
//! kind's fixed priority, then by insertion order.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    RepairBroadcast,
    NodeDeparture {
        node: NodeId,
    },
    /// `node` is `None` for requests from the aggregate stream.
    FileRequest {
        node: Option<NodeId>,
    },
    D2dAttemptEnd {
        success: bool,
    },
    BsDownloadEnd {
        request: u64,
    },
    NodeArrival,
}

impl EventKind {
    pub fn priority(&self) -> u8 {
        match self {
            EventKind::RepairBroadcast => 0,
            EventKind::NodeDeparture { .. } => 1,
            EventKind::FileRequest { .. } => 2,
            EventKind::D2dAttemptEnd { .. } => 3,
            EventKind::BsDownloadEnd { .. } => 4,
            EventKind::NodeArrival => 5,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    seq: u64,
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
        self.time
            .total_cmp(&other.time)
            .then(self.kind.priority().cmp(&other.kind.priority()))
            .then(self.seq.cmp(&other.seq))
    }
}

#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn schedule(&mut self, time: f64, kind: EventKind) {
        debug_assert!(time.is_finite(), "event time must be finite");
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Event { time, kind, seq }));
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|Reverse(e)| e)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
