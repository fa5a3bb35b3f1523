use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::aqm::{AqmQueue, Packet, PacketKind};
use super::config::{AppFlowConfig, BottleneckConfig, HEADER_BYTES};
use super::schedule::{replay_schedule, LoopedSchedule};
use super::shaper::TokenBucket;
use super::tcp::AimdSender;
use super::trace::{ConfigEcho, FlowCounters, SenderStats, SimTrace, Telemetry};
use crate::net::{flow_key, Protocol};
use crate::pipeline::CrossTrafficProfile;

/// Upper bound of the random app start offset.
const START_JITTER_NS: u64 = 1_000_000;

#[derive(Debug, Clone)]
enum Event {
    Cross { bytes: u32 },
    AppStart,
    Wake,
    Deliver(Packet),
    Ack { tx: u64, sent_at: u64 },
    Rto,
}

#[derive(Debug)]
struct Scheduled {
    time: u64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // reversed so the max-heap pops the earliest event first
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

struct Uplink {
    bucket: TokenBucket,
    free_at: u64,
}

pub(crate) struct Engine {
    now: u64,
    end: u64,
    seq: u64,
    events: BinaryHeap<Scheduled>,
    queue: AqmQueue,
    slot: Option<Packet>,
    bucket: TokenBucket,
    wake_pending: bool,
    uplink: Option<Uplink>,
    down_ns: u64,
    up_ns: u64,
    mtu: u32,
    sender: AimdSender,
    rto_pending: bool,
    cross: Option<LoopedSchedule>,
    telemetry: Telemetry,
    app: FlowCounters,
    cross_counters: FlowCounters,
    drops: Vec<Packet>,
    app_flow: u64,
    cross_flow: u64,
}

impl Engine {
    pub fn new(
        bcfg: &BottleneckConfig,
        app: &AppFlowConfig,
        ctp: Option<&CrossTrafficProfile>,
        telemetry_bin_ms: u32,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(app.seed);
        let start = rng.random_range(0..START_JITTER_NS);
        let perturbation: u64 = rng.random();
        let (down_ns, up_ns) = bcfg.one_way_ns();
        let end = app.duration_ns();
        let uplink = bcfg.shape_uplink.then(|| Uplink {
            bucket: TokenBucket::new(bcfg.rate_bps(), bcfg.token_bucket_burst_bytes),
            free_at: 0,
        });
        let cross = ctp.map(|c| {
            let period = c.bins.len() as u64 * u64::from(c.bin_width_ms) * 1_000_000;
            LoopedSchedule::new(replay_schedule(c, bcfg.mtu_bytes), period)
        });
        let mut engine = Self {
            now: 0,
            end,
            seq: 0,
            events: BinaryHeap::new(),
            queue: AqmQueue::new(bcfg, perturbation),
            slot: None,
            bucket: TokenBucket::new(bcfg.rate_bps(), bcfg.token_bucket_burst_bytes),
            wake_pending: false,
            uplink,
            down_ns,
            up_ns,
            mtu: bcfg.mtu_bytes,
            sender: AimdSender::new(app).with_handshake_rtt(down_ns + up_ns),
            rto_pending: false,
            cross,
            telemetry: Telemetry::new(telemetry_bin_ms, end),
            app: FlowCounters::default(),
            cross_counters: FlowCounters::default(),
            drops: Vec::new(),
            app_flow: flow_key(
                Ipv4Addr::new(192, 0, 2, 1),
                443,
                Ipv4Addr::new(10, 0, 0, 2),
                50000,
                Protocol::Tcp,
            ),
            cross_flow: flow_key(
                Ipv4Addr::new(198, 51, 100, 7),
                0,
                Ipv4Addr::new(10, 0, 0, 3),
                0,
                Protocol::Udp,
            ),
        };
        engine.schedule(start, Event::AppStart);
        engine.next_cross();
        engine
    }

    fn schedule(&mut self, time: u64, event: Event) {
        self.seq += 1;
        self.events.push(Scheduled {
            time,
            seq: self.seq,
            event,
        });
    }

    fn next_cross(&mut self) {
        if let Some((t, bytes)) = self.cross.as_mut().and_then(LoopedSchedule::next) {
            self.schedule(t, Event::Cross { bytes });
        }
    }

    pub fn run(mut self, echo: ConfigEcho) -> SimTrace {
        while self.events.peek().is_some_and(|e| e.time < self.end) {
            let Scheduled { time, event, .. } = self.events.pop().expect("peeked");
            self.now = time;
            self.handle(event);
        }
        for p in self.queue.packets().into_iter().chain(self.slot) {
            self.counters(p.kind).in_flight(p.bytes);
        }
        for e in std::mem::take(&mut self.events) {
            if let Event::Deliver(p) = e.event {
                self.counters(p.kind).in_flight(p.bytes);
            }
        }
        let sender = SenderStats {
            losses: self.sender.losses(),
            reductions: self.sender.reductions(),
            timeouts: self.sender.timeouts(),
            final_cwnd_pkts: self.sender.cwnd(),
        };
        self.telemetry.finish(echo, self.app, self.cross_counters, sender)
    }

    fn counters(&mut self, kind: PacketKind) -> &mut FlowCounters {
        match kind {
            PacketKind::App { .. } => &mut self.app,
            PacketKind::Cross => &mut self.cross_counters,
        }
    }

    fn handle(&mut self, event: Event) {
        match event {
            Event::Cross { bytes } => {
                let p = Packet {
                    flow: self.cross_flow,
                    bytes,
                    enqueued_at: self.now,
                    kind: PacketKind::Cross,
                };
                self.admit(p);
                self.service();
                self.next_cross();
            }
            Event::AppStart => self.send_app(),
            Event::Wake => {
                self.wake_pending = false;
                self.service();
            }
            Event::Deliver(p) => {
                self.counters(p.kind).deliver(p.bytes);
                match p.kind {
                    PacketKind::App { tx, sent_at } => {
                        self.telemetry.app_delivered(self.now, p.bytes - HEADER_BYTES);
                        let at = self.ack_arrival();
                        self.schedule(at, Event::Ack { tx, sent_at });
                    }
                    PacketKind::Cross => self.telemetry.cross_delivered(self.now, p.bytes),
                }
            }
            Event::Ack { tx, sent_at } => {
                let rtt = self.now - sent_at;
                self.telemetry.rtt(self.now, rtt);
                self.sender.on_ack(tx, rtt, self.now);
                self.send_app();
            }
            Event::Rto => {
                self.rto_pending = false;
                self.sender.on_timer(self.now);
                self.send_app();
            }
        }
    }

    fn ack_arrival(&mut self) -> u64 {
        let departs = match self.uplink.as_mut() {
            None => self.now,
            Some(up) => {
                let t = self.now.max(up.free_at);
                up.bucket.refill(t);
                let ready = up.bucket.ready_at(HEADER_BYTES);
                up.bucket.refill(ready);
                up.bucket.consume(HEADER_BYTES);
                up.free_at = ready;
                ready
            }
        };
        departs + self.up_ns
    }

    fn send_app(&mut self) {
        while self.sender.can_send() {
            let tx = self.sender.on_send(self.now);
            let p = Packet {
                flow: self.app_flow,
                bytes: self.mtu,
                enqueued_at: self.now,
                kind: PacketKind::App {
                    tx,
                    sent_at: self.now,
                },
            };
            self.admit(p);
        }
        self.service();
        if !self.rto_pending {
            if let Some(d) = self.sender.rto_deadline() {
                self.rto_pending = true;
                self.schedule(d.max(self.now), Event::Rto);
            }
        }
    }

    fn admit(&mut self, p: Packet) {
        self.counters(p.kind).inject(p.bytes);
        self.queue.enqueue(p, &mut self.drops);
        self.account_drops();
    }

    fn account_drops(&mut self) {
        let mut drops = std::mem::take(&mut self.drops);
        for p in drops.drain(..) {
            self.counters(p.kind).drop(p.bytes);
            self.telemetry.drop(self.now);
        }
        self.drops = drops;
    }

    fn service(&mut self) {
        if !self.wake_pending {
            loop {
                if self.slot.is_none() {
                    self.slot = self.queue.dequeue(self.now, &mut self.drops);
                    self.account_drops();
                }
                let Some(p) = self.slot else { break };
                self.bucket.refill(self.now);
                let ready = self.bucket.ready_at(p.bytes);
                if ready > self.now {
                    self.wake_pending = true;
                    self.schedule(ready, Event::Wake);
                    break;
                }
                self.bucket.consume(p.bytes);
                self.slot = None;
                self.schedule(self.now + self.down_ns, Event::Deliver(p));
            }
        }
        let qlen = self.queue.len() as u64 + u64::from(self.slot.is_some());
        self.telemetry.queue_len(self.now, qlen);
    }
}
