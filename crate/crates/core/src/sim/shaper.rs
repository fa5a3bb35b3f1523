/// Token bucket with exact integer accounting. One byte costs 8·10⁹ units
/// and the bucket gains `rate_bps` units per nanosecond.
#[derive(Debug, Clone)]
pub(crate) struct TokenBucket {
    rate: i128,
    capacity: i128,
    tokens: i128,
    last: u64,
}

const UNITS_PER_BYTE: i128 = 8_000_000_000;

impl TokenBucket {
    /// Starts full.
    pub fn new(rate_bps: u64, burst_bytes: u32) -> Self {
        let capacity = i128::from(burst_bytes) * UNITS_PER_BYTE;
        Self {
            rate: i128::from(rate_bps),
            capacity,
            tokens: capacity,
            last: 0,
        }
    }

    pub fn refill(&mut self, now: u64) {
        debug_assert!(now >= self.last);
        let gained = i128::from(now - self.last) * self.rate;
        self.tokens = (self.tokens + gained).min(self.capacity);
        self.last = now;
    }

    /// Earliest time, not before the last refill, at which a packet of
    /// `bytes` may leave. A packet larger than the bucket waits for a full
    /// bucket and leaves the balance negative.
    pub fn ready_at(&self, bytes: u32) -> u64 {
        let need = (i128::from(bytes) * UNITS_PER_BYTE).min(self.capacity);
        if self.tokens >= need {
            self.last
        } else {
            let missing = need - self.tokens;
            self.last + ((missing + self.rate - 1) / self.rate) as u64
        }
    }

    pub fn consume(&mut self, bytes: u32) {
        self.tokens -= i128::from(bytes) * UNITS_PER_BYTE;
    }
}
