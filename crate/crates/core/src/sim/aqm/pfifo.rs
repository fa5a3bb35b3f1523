use super::{Fifo, Packet};

/// Tail drop once `capacity` packets are queued.
#[derive(Debug, Clone)]
pub struct Pfifo {
    fifo: Fifo,
    capacity: usize,
}

impl Pfifo {
    pub fn new(capacity: usize) -> Self {
        Self {
            fifo: Fifo::default(),
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

    pub fn dequeue(&mut self) -> Option<Packet> {
        self.fifo.pop()
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
