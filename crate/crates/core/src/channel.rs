//! Pluggable latency and impairment channels.
//!
//! A [`Channel`] stores copies of pushed messages until their delivery tick.
//! *When* a message is delivered (or whether it is lost) is decided by a
//! [`DelayModel`]. Five models ship with the crate:
//!
//! * [`ZeroDelay`]: delivered on the tick it was sent.
//! * [`ShiftQueue`]: a fixed queue advanced one slot per tick.
//! * [`GaussianJitter`]: base delay plus truncated Gaussian jitter and loss.
//! * [`GoodBadLink`]: periodic good/bad modes behind a token-bucket rate
//!   limit; reorders across mode transitions.
//! * [`TraceReplay`]: per-sequence delays exported by an external network
//!   simulator.
//!
//! Delays are quantized to the control tick (rounded to nearest).

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Bernoulli, Distribution, Normal};

use crate::error::ConfigError;
use crate::Tick;

/// A payload with its sequence number and send/delivery ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct StampedMessage<P> {
    pub payload: P,
    pub seq: u64,
    pub send_tick: Tick,
    /// Assigned by the channel on push.
    pub deliver_tick: Tick,
}

impl<P> StampedMessage<P> {
    pub fn new(payload: P, seq: u64, send_tick: Tick) -> Self {
        StampedMessage {
            payload,
            seq,
            send_tick,
            deliver_tick: send_tick,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterParams {
    /// seconds
    pub base_delay: f64,
    /// seconds
    pub jitter_sigma: f64,
    pub loss_prob: f64,
    pub allow_reorder: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodBadParams {
    /// bits/second
    pub good_rate: f64,
    pub bad_rate: f64,
    /// seconds
    pub good_delay: f64,
    pub bad_delay: f64,
    /// seconds per mode
    pub period: f64,
    /// bits per message
    pub msg_size: f64,
}

impl GoodBadParams {
    /// 1 Mbit/s with 50 ms in good mode, 100 kbit/s with 500 ms in bad mode,
    /// switching every 60 s.
    pub fn mini_maxwell(msg_size: f64) -> Self {
        GoodBadParams {
            good_rate: 1e6,
            bad_rate: 1e5,
            good_delay: 0.05,
            bad_delay: 0.5,
            period: 60.0,
            msg_size,
        }
    }
}

/// Per-sequence one-way delays in milliseconds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DelayTrace {
    delays_ms: BTreeMap<u64, f64>,
}

impl DelayTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, seq: u64, delay_ms: f64) -> Result<(), ConfigError> {
        if !(delay_ms >= 0.0 && delay_ms.is_finite()) {
            return Err(ConfigError::invalid(
                "trace delay_ms",
                "must be a non-negative finite number",
            ));
        }
        self.delays_ms.insert(seq, delay_ms);
        Ok(())
    }

    pub fn get(&self, seq: u64) -> Option<f64> {
        self.delays_ms.get(&seq).copied()
    }

    pub fn len(&self) -> usize {
        self.delays_ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays_ms.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceParams {
    pub trace: DelayTrace,
    /// Used for sequence numbers absent from the trace (seconds).
    pub base_delay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelKind {
    Zero,
    Queue { queue_len: u64 },
    Jitter(JitterParams),
    GoodBad(GoodBadParams),
    Trace(TraceParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    /// Overrides the seed the runner derives from the scenario seed.
    pub seed: Option<u64>,
}

impl ChannelConfig {
    pub fn zero() -> Self {
        ChannelKind::Zero.into()
    }

    pub fn queue(queue_len: u64) -> Self {
        ChannelKind::Queue { queue_len }.into()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn non_neg(field: &str, v: f64) -> Result<(), ConfigError> {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, "must be finite and non-negative"))
            }
        }
        fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::invalid(field, "must be finite and positive"))
            }
        }
        match &self.kind {
            ChannelKind::Zero | ChannelKind::Queue { .. } => Ok(()),
            ChannelKind::Jitter(p) => {
                non_neg("base_delay", p.base_delay)?;
                non_neg("jitter_sigma", p.jitter_sigma)?;
                if !(0.0..=1.0).contains(&p.loss_prob) {
                    return Err(ConfigError::invalid("loss_prob", "must lie in [0, 1]"));
                }
                Ok(())
            }
            ChannelKind::GoodBad(p) => {
                positive("good_rate", p.good_rate)?;
                positive("bad_rate", p.bad_rate)?;
                non_neg("good_delay", p.good_delay)?;
                non_neg("bad_delay", p.bad_delay)?;
                positive("period", p.period)?;
                non_neg("msg_size", p.msg_size)
            }
            ChannelKind::Trace(p) => non_neg("base_delay", p.base_delay),
        }
    }

    /// Instantiate the delay model for one run and direction.
    pub fn build_model(&self, seed: u64, dt: f64) -> Result<Box<dyn DelayModel + Send>, ConfigError> {
        self.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ConfigError::invalid("dt", "must be positive"));
        }
        let seed = self.seed.unwrap_or(seed);
        Ok(match &self.kind {
            ChannelKind::Zero => Box::new(ZeroDelay),
            ChannelKind::Queue { queue_len } => Box::new(ShiftQueue::new(*queue_len)),
            ChannelKind::Jitter(p) => Box::new(GaussianJitter::new(*p, seed, dt)?),
            ChannelKind::GoodBad(p) => Box::new(GoodBadLink::new(*p, dt)),
            ChannelKind::Trace(p) => Box::new(TraceReplay::new(p.clone(), dt)),
        })
    }
}

impl From<ChannelKind> for ChannelConfig {
    fn from(kind: ChannelKind) -> Self {
        ChannelConfig { kind, seed: None }
    }
}

/// Decides the delivery tick of each pushed message.
pub trait DelayModel {
    /// `None` means the message is lost.
    fn schedule(&mut self, seq: u64, now: Tick) -> Option<Tick>;
}

fn ticks_for(delay_s: f64, dt: f64) -> Tick {
    libm::round(delay_s / dt).max(0.0) as Tick
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroDelay;

impl DelayModel for ZeroDelay {
    fn schedule(&mut self, _seq: u64, now: Tick) -> Option<Tick> {
        Some(now)
    }
}

/// Every tick the queue shifts one slot; a message leaves after
/// `queue_len` shifts.
#[derive(Debug, Clone, Copy)]
pub struct ShiftQueue {
    queue_len: u64,
}

impl ShiftQueue {
    pub fn new(queue_len: u64) -> Self {
        ShiftQueue { queue_len }
    }
}

impl DelayModel for ShiftQueue {
    fn schedule(&mut self, _seq: u64, now: Tick) -> Option<Tick> {
        Some(now + self.queue_len)
    }
}

#[derive(Debug, Clone)]
pub struct GaussianJitter {
    params: JitterParams,
    dt: f64,
    rng: ChaCha8Rng,
    noise: Normal<f64>,
    loss: Bernoulli,
    last_assigned: Tick,
}

impl GaussianJitter {
    pub fn new(params: JitterParams, seed: u64, dt: f64) -> Result<Self, ConfigError> {
        let noise = Normal::new(0.0, params.jitter_sigma)
            .map_err(|_| ConfigError::invalid("jitter_sigma", "must be finite and non-negative"))?;
        let loss = Bernoulli::new(params.loss_prob)
            .map_err(|_| ConfigError::invalid("loss_prob", "must lie in [0, 1]"))?;
        Ok(GaussianJitter {
            params,
            dt,
            rng: ChaCha8Rng::seed_from_u64(seed),
            noise,
            loss,
            last_assigned: 0,
        })
    }
}

impl DelayModel for GaussianJitter {
    fn schedule(&mut self, _seq: u64, now: Tick) -> Option<Tick> {
        // both draws happen every push so the stream never shifts
        let lost = self.loss.sample(&mut self.rng);
        let delay = (self.params.base_delay + self.noise.sample(&mut self.rng)).max(0.0);
        if lost {
            return None;
        }
        let mut tick = now + ticks_for(delay, self.dt);
        if !self.params.allow_reorder {
            tick = tick.max(self.last_assigned);
        }
        self.last_assigned = tick;
        Some(tick)
    }
}

/// Alternating good/bad link behind a token bucket holding one message.
///
/// Tokens refill at the current mode's rate. A message waits until
/// `msg_size` tokens are available, then takes the mode's base delay.
/// No monotonicity clamp is applied, so a message sent early in a good
/// window may overtake one sent late in the preceding bad window.
#[derive(Debug, Clone)]
pub struct GoodBadLink {
    params: GoodBadParams,
    dt: f64,
    /// time at which the bucket next holds `msg_size` tokens (seconds)
    ready_at: f64,
}

impl GoodBadLink {
    pub fn new(params: GoodBadParams, dt: f64) -> Self {
        GoodBadLink {
            params,
            dt,
            ready_at: f64::NEG_INFINITY,
        }
    }

    pub fn is_good(&self, t: f64) -> bool {
        libm::floor(t / self.params.period) as i64 % 2 == 0
    }

    fn mode(&self, t: f64) -> (f64, f64) {
        if self.is_good(t) {
            (self.params.good_rate, self.params.good_delay)
        } else {
            (self.params.bad_rate, self.params.bad_delay)
        }
    }

    /// Token level at time `t` (bits), in `[0, msg_size]`.
    pub fn token_level(&self, t: f64) -> f64 {
        let (rate, _) = self.mode(t);
        (self.params.msg_size - (self.ready_at - t) * rate).clamp(0.0, self.params.msg_size)
    }

    /// Wait for tokens plus base delay for a message offered at `t`, in
    /// seconds; returns `(wait, total)` and consumes the tokens.
    pub fn offer(&mut self, t: f64) -> (f64, f64) {
        let (rate, base) = self.mode(t);
        let wait = (self.ready_at - t).max(0.0);
        self.ready_at = t + wait + self.params.msg_size / rate;
        (wait, wait + base)
    }
}

impl DelayModel for GoodBadLink {
    fn schedule(&mut self, _seq: u64, now: Tick) -> Option<Tick> {
        let (_, delay) = self.offer(now as f64 * self.dt);
        Some(now + ticks_for(delay, self.dt))
    }
}

/// Delays replayed from an offline network-simulator export.
#[derive(Debug, Clone)]
pub struct TraceReplay {
    params: TraceParams,
    dt: f64,
}

impl TraceReplay {
    pub fn new(params: TraceParams, dt: f64) -> Self {
        TraceReplay { params, dt }
    }
}

impl DelayModel for TraceReplay {
    fn schedule(&mut self, seq: u64, now: Tick) -> Option<Tick> {
        let delay_s = match self.params.trace.get(seq) {
            Some(ms) => ms / 1000.0,
            None => self.params.base_delay,
        };
        Some(now + ticks_for(delay_s, self.dt))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PushOutcome {
    Scheduled(Tick),
    Lost,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChannelStats {
    pub pushed: u64,
    pub delivered: u64,
    pub lost: u64,
}

impl ChannelStats {
    pub fn in_flight(&self) -> u64 {
        self.pushed - self.delivered - self.lost
    }
}

/// In-flight store for one direction of one run.
pub struct Channel<P> {
    model: Box<dyn DelayModel + Send>,
    /// keyed by (deliver_tick, seq, push order)
    in_flight: BTreeMap<(Tick, u64, u64), StampedMessage<P>>,
    stats: ChannelStats,
}

impl<P: Clone> Channel<P> {
    pub fn new(config: &ChannelConfig, seed: u64, dt: f64) -> Result<Self, ConfigError> {
        Ok(Self::with_model(config.build_model(seed, dt)?))
    }

    pub fn with_model(model: Box<dyn DelayModel + Send>) -> Self {
        Channel {
            model,
            in_flight: BTreeMap::new(),
            stats: ChannelStats::default(),
        }
    }

    /// Store a copy of `msg`, stamped with its delivery tick.
    pub fn push(&mut self, msg: &StampedMessage<P>, now: Tick) -> PushOutcome {
        debug_assert_eq!(msg.send_tick, now);
        self.stats.pushed += 1;
        match self.model.schedule(msg.seq, now) {
            None => {
                self.stats.lost += 1;
                PushOutcome::Lost
            }
            Some(tick) => {
                let tick = tick.max(now);
                let mut copy = msg.clone();
                copy.deliver_tick = tick;
                self.in_flight.insert((tick, copy.seq, self.stats.pushed), copy);
                PushOutcome::Scheduled(tick)
            }
        }
    }

    /// Remove and return every message due by `now`, ordered by seq.
    pub fn deliver(&mut self, now: Tick) -> Vec<StampedMessage<P>> {
        let later = self.in_flight.split_off(&(now + 1, 0, 0));
        let due = core::mem::replace(&mut self.in_flight, later);
        let mut out: Vec<_> = due.into_values().collect();
        out.sort_by_key(|m| m.seq);
        self.stats.delivered += out.len() as u64;
        out
    }

    pub fn stats(&self) -> ChannelStats {
        self.stats
    }

    /// End of run: whatever is still in flight never arrived and is counted
    /// as lost. Returns the final counters.
    pub fn close(&mut self) -> ChannelStats {
        self.stats.lost += self.in_flight.len() as u64;
        self.in_flight.clear();
        self.stats
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }
}

/// The delivered message with the highest seq newer than
/// `last_accepted_seq`, if any. Stale messages are ignored, so the accepted
/// seq stays monotone under reordering.
pub fn freshest<P>(
    delivered: &[StampedMessage<P>],
    last_accepted_seq: u64,
) -> Option<&StampedMessage<P>> {
    delivered
        .iter()
        .filter(|m| m.seq > last_accepted_seq)
        .max_by_key(|m| m.seq)
}
