//! Reno-style AIMD bulk sender.
//!
//! Every transmission carries a fresh index and the receiver acknowledges
//! each one, so a gap shows up as an index that stays unacknowledged while
//! later ones arrive. The source is unbounded and data identity is not
//! tracked: lost segments are replaced by new ones.

use std::collections::BTreeMap;

use super::config::AppFlowConfig;

/// Later transmissions that must be acknowledged before one is declared lost.
pub const DUPTHRESH: u64 = 3;
pub const MIN_RTO_NS: u64 = 200_000_000;
pub const INITIAL_RTO_NS: u64 = 1_000_000_000;
pub const MAX_RTO_NS: u64 = 60_000_000_000;

#[derive(Debug, Clone)]
pub struct AimdSender {
    cwnd: u64,
    ssthresh: u64,
    ca_acked: u64,
    next_tx: u64,
    outstanding: BTreeMap<u64, u64>,
    /// Losses among transmissions below this index were already answered.
    recovery_point: u64,
    srtt: Option<u64>,
    rttvar: u64,
    rto: u64,
    rto_deadline: Option<u64>,
    losses: u64,
    reductions: u64,
    timeouts: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AckOutcome {
    /// The acknowledged transmission was still outstanding.
    pub fresh: bool,
    pub lost: u64,
}

impl AimdSender {
    pub fn new(cfg: &AppFlowConfig) -> Self {
        Self {
            cwnd: u64::from(cfg.initial_cwnd_pkts),
            ssthresh: u64::from(cfg.init_ssthresh_pkts),
            ca_acked: 0,
            next_tx: 0,
            outstanding: BTreeMap::new(),
            recovery_point: 0,
            srtt: None,
            rttvar: 0,
            rto: INITIAL_RTO_NS,
            rto_deadline: None,
            losses: 0,
            reductions: 0,
            timeouts: 0,
        }
    }

    /// Seeds the RTT estimator, as the connection handshake would.
    pub fn with_handshake_rtt(mut self, rtt: u64) -> Self {
        self.sample_rtt(rtt);
        self
    }

    pub fn cwnd(&self) -> u64 {
        self.cwnd
    }

    pub fn ssthresh(&self) -> u64 {
        self.ssthresh
    }

    pub fn in_flight(&self) -> u64 {
        self.outstanding.len() as u64
    }

    pub fn can_send(&self) -> bool {
        self.in_flight() < self.cwnd
    }

    pub fn rto_deadline(&self) -> Option<u64> {
        self.rto_deadline
    }

    pub fn losses(&self) -> u64 {
        self.losses
    }

    pub fn reductions(&self) -> u64 {
        self.reductions
    }

    pub fn timeouts(&self) -> u64 {
        self.timeouts
    }

    /// Registers a transmission at `now` and returns its index.
    pub fn on_send(&mut self, now: u64) -> u64 {
        let tx = self.next_tx;
        self.next_tx += 1;
        self.outstanding.insert(tx, now);
        if self.rto_deadline.is_none() {
            self.rto_deadline = Some(now + self.rto);
        }
        tx
    }

    fn sample_rtt(&mut self, rtt: u64) {
        match self.srtt {
            None => {
                self.srtt = Some(rtt);
                self.rttvar = rtt / 2;
            }
            Some(srtt) => {
                self.rttvar = (3 * self.rttvar + srtt.abs_diff(rtt)) / 4;
                self.srtt = Some((7 * srtt + rtt) / 8);
            }
        }
        let srtt = self.srtt.unwrap_or(rtt);
        self.rto = (srtt + (4 * self.rttvar).max(1)).clamp(MIN_RTO_NS, MAX_RTO_NS);
    }

    fn reduce(&mut self) {
        self.ssthresh = (self.cwnd / 2).max(2);
        self.cwnd = self.ssthresh;
        self.ca_acked = 0;
        self.recovery_point = self.next_tx;
        self.reductions += 1;
    }

    pub fn on_ack(&mut self, tx: u64, rtt: u64, now: u64) -> AckOutcome {
        if self.outstanding.remove(&tx).is_none() {
            return AckOutcome { fresh: false, lost: 0 };
        }
        self.sample_rtt(rtt);

        let mut lost = 0;
        if tx >= DUPTHRESH {
            let rest = self.outstanding.split_off(&(tx - DUPTHRESH + 1));
            let gone = std::mem::replace(&mut self.outstanding, rest);
            lost = gone.len() as u64;
            self.losses += lost;
            if gone.keys().any(|&j| j >= self.recovery_point) {
                self.reduce();
            }
        }

        if lost == 0 && tx >= self.recovery_point {
            if self.cwnd < self.ssthresh {
                self.cwnd += 1;
            } else {
                self.ca_acked += 1;
                if self.ca_acked >= self.cwnd {
                    self.ca_acked = 0;
                    self.cwnd += 1;
                }
            }
        }

        self.rto_deadline = if self.outstanding.is_empty() {
            None
        } else {
            Some(now + self.rto)
        };
        AckOutcome { fresh: true, lost }
    }

    /// Fires the retransmission timer if it is due; returns whether it did.
    pub fn on_timer(&mut self, now: u64) -> bool {
        match self.rto_deadline {
            Some(d) if now >= d && !self.outstanding.is_empty() => {
                self.ssthresh = (self.in_flight() / 2).max(2);
                self.cwnd = 1;
                self.ca_acked = 0;
                self.losses += self.in_flight();
                self.outstanding.clear();
                self.recovery_point = self.next_tx;
                self.timeouts += 1;
                self.rto = (self.rto * 2).min(MAX_RTO_NS);
                self.rto_deadline = None;
                true
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MS: u64 = 1_000_000;

    fn sender() -> AimdSender {
        AimdSender::new(&AppFlowConfig::new(10.0, 0))
    }

    /// Sends a full window at `now` and returns the indices.
    fn send_window(s: &mut AimdSender, now: u64) -> Vec<u64> {
        let mut v = Vec::new();
        while s.can_send() {
            v.push(s.on_send(now));
        }
        v
    }

    #[test]
    fn slow_start_doubles_per_round() {
        let mut s = sender();
        let mut now = 0;
        for expected in [20, 40, 64] {
            let w = send_window(&mut s, now);
            now += 100 * MS;
            for tx in w {
                s.on_ack(tx, 100 * MS, now);
            }
            assert_eq!(s.cwnd(), expected);
        }
        assert_eq!(s.cwnd(), 64);
    }

    #[test]
    fn congestion_avoidance_adds_one_per_round() {
        let mut s = sender();
        let mut now = 0;
        while s.cwnd() < s.ssthresh() {
            let w = send_window(&mut s, now);
            now += MS;
            for tx in w {
                s.on_ack(tx, MS, now);
            }
        }
        let start = s.cwnd();
        for round in 1..=3 {
            let w = send_window(&mut s, now);
            now += MS;
            for tx in w {
                s.on_ack(tx, MS, now);
            }
            assert_eq!(s.cwnd(), start + round);
        }
    }

    #[test]
    fn one_reduction_per_window_of_losses() {
        let mut s = sender();
        let w = send_window(&mut s, 0);
        assert_eq!(w.len(), 10);
        // 1 and 2 are lost; the rest arrive
        for &tx in &w[..1] {
            s.on_ack(tx, 10 * MS, 10 * MS);
        }
        let mut lost = 0;
        for &tx in &w[3..] {
            lost += s.on_ack(tx, 10 * MS, 10 * MS).lost;
        }
        assert_eq!(lost, 2);
        assert_eq!(s.reductions(), 1);
        // two acks in slow start take cwnd to 12 before the halving
        assert_eq!(s.cwnd(), 6);
        assert_eq!(s.ssthresh(), s.cwnd());
    }

    #[test]
    fn late_ack_of_declared_loss_is_stale() {
        let mut s = sender();
        let w = send_window(&mut s, 0);
        s.on_ack(w[4], MS, MS);
        let out = s.on_ack(w[0], MS, MS);
        assert!(!out.fresh);
    }

    #[test]
    fn timeout_collapses_window() {
        let mut s = sender();
        send_window(&mut s, 0);
        assert!(!s.on_timer(INITIAL_RTO_NS - 1));
        assert!(s.on_timer(INITIAL_RTO_NS));
        assert_eq!(s.cwnd(), 1);
        assert_eq!(s.ssthresh(), 5);
        assert_eq!(s.in_flight(), 0);
        assert_eq!(s.timeouts(), 1);
    }

    #[test]
    fn handshake_sample_sets_timer() {
        let mut s = sender().with_handshake_rtt(1_000 * MS);
        s.on_send(0);
        assert_eq!(s.rto_deadline(), Some(3_000 * MS));
    }

    #[test]
    fn rto_has_floor() {
        let mut s = sender();
        let tx = s.on_send(0);
        s.on_send(0);
        s.on_ack(tx, MS, MS);
        assert_eq!(s.rto_deadline(), Some(MS + MIN_RTO_NS));
    }
}
