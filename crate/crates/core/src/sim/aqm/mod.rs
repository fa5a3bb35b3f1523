//! Queue disciplines at the bottleneck.

mod codel;
mod fq_codel;
mod pfifo;

use std::collections::VecDeque;

pub use self::codel::{Codel, CodelParams, CodelQueue};
pub use self::fq_codel::{FqCodel, FQ_BUCKETS};
pub use self::pfifo::Pfifo;

use super::config::{Aqm, BottleneckConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    /// Transmission `tx` of the app flow, handed to the bottleneck at `sent_at`.
    App { tx: u64, sent_at: u64 },
    Cross,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub flow: u64,
    pub bytes: u32,
    pub enqueued_at: u64,
    pub kind: PacketKind,
}

/// Plain FIFO with a byte count.
#[derive(Debug, Clone, Default)]
pub struct Fifo {
    packets: VecDeque<Packet>,
    bytes: u64,
}

impl Fifo {
    pub fn push(&mut self, p: Packet) {
        self.bytes += u64::from(p.bytes);
        self.packets.push_back(p);
    }

    pub fn pop(&mut self) -> Option<Packet> {
        let p = self.packets.pop_front()?;
        self.bytes -= u64::from(p.bytes);
        Some(p)
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    pub fn iter(&self) -> impl Iterator<Item = &Packet> {
        self.packets.iter()
    }
}

/// The configured discipline. Dropped packets are appended to `drops`.
#[derive(Debug, Clone)]
pub enum AqmQueue {
    Pfifo(Pfifo),
    Codel(CodelQueue),
    FqCodel(Box<FqCodel>),
}

impl AqmQueue {
    pub fn new(cfg: &BottleneckConfig, perturbation: u64) -> Self {
        let capacity = cfg.queue_capacity_pkts as usize;
        let params = CodelParams::with_mtu(cfg.mtu_bytes);
        match cfg.aqm {
            Aqm::Pfifo => AqmQueue::Pfifo(Pfifo::new(capacity)),
            Aqm::Codel => AqmQueue::Codel(CodelQueue::new(capacity, params)),
            Aqm::FqCodel => AqmQueue::FqCodel(Box::new(FqCodel::new(
                capacity,
                cfg.mtu_bytes + 14,
                params,
                perturbation,
            ))),
        }
    }

    pub fn enqueue(&mut self, p: Packet, drops: &mut Vec<Packet>) {
        match self {
            AqmQueue::Pfifo(q) => q.enqueue(p, drops),
            AqmQueue::Codel(q) => q.enqueue(p, drops),
            AqmQueue::FqCodel(q) => q.enqueue(p, drops),
        }
    }

    pub fn dequeue(&mut self, now: u64, drops: &mut Vec<Packet>) -> Option<Packet> {
        match self {
            AqmQueue::Pfifo(q) => q.dequeue(),
            AqmQueue::Codel(q) => q.dequeue(now, drops),
            AqmQueue::FqCodel(q) => q.dequeue(now, drops),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            AqmQueue::Pfifo(q) => q.len(),
            AqmQueue::Codel(q) => q.len(),
            AqmQueue::FqCodel(q) => q.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Queued packets, in no particular order.
    pub fn packets(&self) -> Vec<Packet> {
        match self {
            AqmQueue::Pfifo(q) => q.fifo().iter().copied().collect(),
            AqmQueue::Codel(q) => q.fifo().iter().copied().collect(),
            AqmQueue::FqCodel(q) => q.packets(),
        }
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    pub fn pkt(flow: u64, bytes: u32, at: u64) -> Packet {
        Packet {
            flow,
            bytes,
            enqueued_at: at,
            kind: PacketKind::Cross,
        }
    }
}
