use super::{Fifo, Packet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodelParams {
    pub target_ns: u64,
    pub interval_ns: u64,
    pub mtu: u32,
}

impl CodelParams {
    /// Target 5 ms, interval 100 ms.
    pub fn with_mtu(mtu: u32) -> Self {
        Self {
            target_ns: 5_000_000,
            interval_ns: 100_000_000,
            mtu,
        }
    }
}

/// Controlled-delay drop state for one queue.
#[derive(Debug, Clone, Default)]
pub struct Codel {
    first_above: Option<u64>,
    drop_next: u64,
    count: u32,
    lastcount: u32,
    dropping: bool,
}

fn control_law(t: u64, count: u32, interval: u64) -> u64 {
    t + (interval as f64 / f64::from(count).sqrt()) as u64
}

impl Codel {
    pub fn is_dropping(&self) -> bool {
        self.dropping
    }

    fn pop(&mut self, q: &mut Fifo, now: u64, p: &CodelParams) -> (Option<Packet>, bool) {
        let Some(pkt) = q.pop() else {
            self.first_above = None;
            return (None, false);
        };
        let sojourn = now - pkt.enqueued_at;
        if sojourn < p.target_ns || q.bytes() <= u64::from(p.mtu) {
            self.first_above = None;
            return (Some(pkt), false);
        }
        match self.first_above {
            None => {
                self.first_above = Some(now + p.interval_ns);
                (Some(pkt), false)
            }
            Some(t) => (Some(pkt), now >= t),
        }
    }

    pub fn dequeue(
        &mut self,
        q: &mut Fifo,
        now: u64,
        p: &CodelParams,
        drops: &mut Vec<Packet>,
    ) -> Option<Packet> {
        let (mut pkt, ok_to_drop) = self.pop(q, now, p);
        if pkt.is_none() {
            self.dropping = false;
            return None;
        }
        if self.dropping {
            if !ok_to_drop {
                self.dropping = false;
            }
            while self.dropping && now >= self.drop_next {
                drops.extend(pkt.take());
                self.count += 1;
                let (next, ok) = self.pop(q, now, p);
                pkt = next;
                if ok {
                    self.drop_next = control_law(self.drop_next, self.count, p.interval_ns);
                } else {
                    self.dropping = false;
                }
            }
        } else if ok_to_drop {
            drops.extend(pkt.take());
            pkt = self.pop(q, now, p).0;
            self.dropping = true;
            let delta = self.count.saturating_sub(self.lastcount);
            self.count = if delta > 1 && now.saturating_sub(self.drop_next) < 16 * p.interval_ns {
                delta
            } else {
                1
            };
            self.drop_next = control_law(now, self.count, p.interval_ns);
            self.lastcount = self.count;
        }
        pkt
    }
}

/// Single FIFO governed by CoDel, with tail drop at capacity.
#[derive(Debug, Clone)]
pub struct CodelQueue {
    fifo: Fifo,
    state: Codel,
    params: CodelParams,
    capacity: usize,
}

impl CodelQueue {
    pub fn new(capacity: usize, params: CodelParams) -> Self {
        Self {
            fifo: Fifo::default(),
            state: Codel::default(),
            params,
            capacity,
        }
    }

    pub fn enqueue(&mut self, p: Packet, drops: &mut Vec<Packet>) {
        if self.fifo.len() >= self.capacity {
            drops.push(p);
        } else {
            self.fifo.push(p);
        }
    }

    pub fn dequeue(&mut self, now: u64, drops: &mut Vec<Packet>) -> Option<Packet> {
        self.state.dequeue(&mut self.fifo, now, &self.params, drops)
    }

    pub fn len(&self) -> usize {
        self.fifo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fifo.is_empty()
    }

    pub fn fifo(&self) -> &Fifo {
        &self.fifo
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::pkt;
    use super::*;

    const MS: u64 = 1_000_000;

    #[test]
    fn short_sojourn_never_drops() {
        let mut q = CodelQueue::new(1000, CodelParams::with_mtu(1500));
        let mut drops = Vec::new();
        // ten packets every ms, each served 4 ms after arrival
        for i in 0..10_000u64 {
            q.enqueue(pkt(0, 1500, i * MS), &mut drops);
            if i >= 4 {
                assert!(q.dequeue(i * MS, &mut drops).is_some());
            }
        }
        assert!(drops.is_empty());
    }

    #[test]
    fn persistent_queue_triggers_drops_at_increasing_rate() {
        let mut q = CodelQueue::new(10_000, CodelParams::with_mtu(1500));
        let mut drops = Vec::new();
        // arrivals at 2 per ms, service at 1 per ms: the queue keeps growing
        let mut drop_times = Vec::new();
        for t in 0..2_000u64 {
            q.enqueue(pkt(0, 1500, t * MS), &mut drops);
            q.enqueue(pkt(0, 1500, t * MS), &mut drops);
            let before = drops.len();
            q.dequeue(t * MS, &mut drops);
            if drops.len() > before {
                drop_times.push(t);
            }
        }
        assert!(!drop_times.is_empty());
        // nothing is dropped before sojourn has exceeded target for an interval
        assert!(drop_times[0] >= 100);
        let gaps: Vec<u64> = drop_times.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps.first().unwrap() >= gaps.last().unwrap());
        assert!(q.state.is_dropping());
    }

    #[test]
    fn control_law_spacing() {
        assert_eq!(control_law(0, 1, 100 * MS), 100 * MS);
        assert_eq!(control_law(0, 4, 100 * MS), 50 * MS);
    }
}
