use std::collections::VecDeque;

use super::codel::{Codel, CodelParams};
use super::{Fifo, Packet};

pub const FQ_BUCKETS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum List {
    Idle,
    New,
    Old,
}

#[derive(Debug, Clone)]
struct Bucket {
    fifo: Fifo,
    codel: Codel,
    deficit: i64,
    list: List,
}

/// Flow-queued CoDel: packets are hashed to buckets, served by deficit
/// round robin with new flows ahead of old ones, each bucket running its
/// own CoDel instance.
#[derive(Debug, Clone)]
pub struct FqCodel {
    buckets: Vec<Bucket>,
    new_flows: VecDeque<usize>,
    old_flows: VecDeque<usize>,
    quantum: i64,
    params: CodelParams,
    limit: usize,
    len: usize,
    perturbation: u64,
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl FqCodel {
    pub fn new(limit: usize, quantum: u32, params: CodelParams, perturbation: u64) -> Self {
        let bucket = Bucket {
            fifo: Fifo::default(),
            codel: Codel::default(),
            deficit: 0,
            list: List::Idle,
        };
        Self {
            buckets: vec![bucket; FQ_BUCKETS],
            new_flows: VecDeque::new(),
            old_flows: VecDeque::new(),
            quantum: i64::from(quantum),
            params,
            limit,
            len: 0,
            perturbation,
        }
    }

    pub fn bucket_of(&self, flow: u64) -> usize {
        (mix(flow ^ self.perturbation) % FQ_BUCKETS as u64) as usize
    }

    pub fn enqueue(&mut self, p: Packet, drops: &mut Vec<Packet>) {
        let b = self.bucket_of(p.flow);
        let bucket = &mut self.buckets[b];
        bucket.fifo.push(p);
        self.len += 1;
        if bucket.list == List::Idle {
            bucket.list = List::New;
            bucket.deficit = self.quantum;
            self.new_flows.push_back(b);
        }
        if self.len > self.limit {
            self.drop_from_fattest(drops);
        }
    }

    fn drop_from_fattest(&mut self, drops: &mut Vec<Packet>) {
        let fattest = (0..FQ_BUCKETS)
            .max_by_key(|&i| (self.buckets[i].fifo.bytes(), std::cmp::Reverse(i)))
            .expect("buckets exist");
        if let Some(p) = self.buckets[fattest].fifo.pop() {
            self.len -= 1;
            drops.push(p);
        }
    }

    pub fn dequeue(&mut self, now: u64, drops: &mut Vec<Packet>) -> Option<Packet> {
        loop {
            let (b, from_new) = match self.new_flows.front() {
                Some(&b) => (b, true),
                None => (*self.old_flows.front()?, false),
            };
            let bucket = &mut self.buckets[b];
            if bucket.deficit <= 0 {
                bucket.deficit += self.quantum;
                bucket.list = List::Old;
                self.pop_front(from_new);
                self.old_flows.push_back(b);
                continue;
            }
            let before = bucket.fifo.len();
            let pkt = bucket.codel.dequeue(&mut bucket.fifo, now, &self.params, drops);
            self.len -= before - bucket.fifo.len();
            match pkt {
                Some(p) => {
                    bucket.deficit -= i64::from(p.bytes);
                    return Some(p);
                }
                None => {
                    self.pop_front(from_new);
                    if from_new && !self.old_flows.is_empty() {
                        self.buckets[b].list = List::Old;
                        self.old_flows.push_back(b);
                    } else {
                        self.buckets[b].list = List::Idle;
                    }
                }
            }
        }
    }

    fn pop_front(&mut self, from_new: bool) {
        if from_new {
            self.new_flows.pop_front();
        } else {
            self.old_flows.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn packets(&self) -> Vec<Packet> {
        self.buckets.iter().flat_map(|b| b.fifo.iter().copied()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::pkt;
    use super::*;

    const MS: u64 = 1_000_000;

    fn fq() -> FqCodel {
        FqCodel::new(1000, 1514, CodelParams::with_mtu(1500), 0)
    }

    fn distinct_flows(q: &FqCodel) -> (u64, u64) {
        let a = 1;
        let b = (2..).find(|&f| q.bucket_of(f) != q.bucket_of(a)).unwrap();
        (a, b)
    }

    #[test]
    fn equal_load_shares_equally() {
        // 10 Mbps link, 1500 byte packets every 1.2 ms; each flow offers 8 Mbps
        let mut q = fq();
        let (a, b) = distinct_flows(&q);
        let mut drops = Vec::new();
        let mut delivered = [0u64; 2];
        let service_ns = 1_200_000;
        let arrival_ns = 1_500_000;
        let end = 10_000 * MS;
        let (mut next_arrival, mut next_service) = (0u64, 0u64);
        while next_arrival.min(next_service) < end {
            if next_arrival <= next_service {
                q.enqueue(pkt(a, 1500, next_arrival), &mut drops);
                q.enqueue(pkt(b, 1500, next_arrival), &mut drops);
                next_arrival += arrival_ns;
            } else {
                if let Some(p) = q.dequeue(next_service, &mut drops) {
                    delivered[usize::from(p.flow != a)] += u64::from(p.bytes);
                }
                next_service += service_ns;
            }
        }
        let ratio = delivered[0] as f64 / delivered[1] as f64;
        assert!((ratio - 1.0).abs() <= 0.1, "ratio {ratio}");
        assert!(!drops.is_empty());
    }

    #[test]
    fn sparse_flow_bypasses_backlog() {
        let mut q = fq();
        let (bulk, sparse) = distinct_flows(&q);
        let mut drops = Vec::new();
        for _ in 0..50 {
            q.enqueue(pkt(bulk, 1500, 0), &mut drops);
        }
        q.dequeue(0, &mut drops);
        q.enqueue(pkt(sparse, 100, 0), &mut drops);
        // the bulk bucket still has deficit for one more packet, then the new flow goes first
        let order: Vec<u64> = (0..3).map(|_| q.dequeue(0, &mut drops).unwrap().flow).collect();
        assert!(order[..2].contains(&sparse));
    }

    #[test]
    fn overflow_drops_from_fattest() {
        let mut q = FqCodel::new(4, 1514, CodelParams::with_mtu(1500), 0);
        let (a, b) = distinct_flows(&q);
        let mut drops = Vec::new();
        for _ in 0..4 {
            q.enqueue(pkt(a, 1500, 0), &mut drops);
        }
        q.enqueue(pkt(b, 100, 0), &mut drops);
        assert_eq!(q.len(), 4);
        assert_eq!(drops.len(), 1);
        assert_eq!(drops[0].flow, a);
    }

    #[test]
    fn len_tracks_codel_drops() {
        let mut q = fq();
        let mut drops = Vec::new();
        for t in 0..3000u64 {
            q.enqueue(pkt(7, 1500, t * MS), &mut drops);
            q.enqueue(pkt(7, 1500, t * MS), &mut drops);
            q.dequeue(t * MS, &mut drops);
        }
        assert_eq!(q.len(), q.packets().len());
        assert_eq!(q.len() + drops.len() + 3000, 6000);
    }
}
