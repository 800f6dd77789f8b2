//! Discrete-event core: virtual clock, priority queue and random streams.
//!
//! Events are ordered by `(fire_at, seq)` where `seq` is the insertion
//! counter, so simultaneous events dispatch in FIFO order. The engine is
//! single-threaded and owns nothing but the queue; model state lives in the
//! dispatch closure passed to [`Engine::run_until`].

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;
use core::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::time::SimTime;

/// A scheduled occurrence. `payload` carries the kind-specific data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event<P> {
    pub fire_at: SimTime,
    pub seq: u64,
    pub payload: P,
}

impl<P> Event<P> {
    pub fn key(&self) -> (SimTime, u64) {
        (self.fire_at, self.seq)
    }
}

struct Queued<P>(Event<P>);

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        self.0.key() == other.0.key()
    }
}

impl<P> Eq for Queued<P> {}

impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// BinaryHeap is a max-heap; reverse so the earliest key is on top.
impl<P> Ord for Queued<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.key().cmp(&self.0.key())
    }
}

pub struct Engine<P> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Queued<P>>,
    last_dispatched: Option<(SimTime, u64)>,
    dispatched: u64,
}

impl<P> Default for Engine<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Engine<P> {
    pub fn new() -> Self {
        Engine { now: SimTime::ZERO, next_seq: 0, queue: BinaryHeap::new(), last_dispatched: None, dispatched: 0 }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Enqueues `payload` to fire at `fire_at` and returns its sequence number.
    ///
    /// Scheduling into the past means the model has a logic error, so it
    /// panics rather than returning an error.
    pub fn schedule(&mut self, fire_at: SimTime, payload: P) -> u64 {
        assert!(fire_at >= self.now, "event scheduled in the past: fire_at={fire_at} now={}", self.now);
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Queued(Event { fire_at, seq, payload }));
        seq
    }

    pub fn schedule_in(&mut self, delay: SimTime, payload: P) -> u64 {
        self.schedule(self.now + delay, payload)
    }

    /// Key of the next event, if any.
    pub fn peek(&self) -> Option<(SimTime, u64)> {
        self.queue.peek().map(|q| q.0.key())
    }

    /// Dispatches every event with `fire_at <= horizon` in `(fire_at, seq)`
    /// order, then leaves the clock at `horizon`. The handler may schedule
    /// further events, including ones that still fall inside the horizon.
    pub fn run_until<F>(&mut self, horizon: SimTime, mut handler: F) -> u64
    where
        F: FnMut(&mut Self, Event<P>),
    {
        assert!(horizon >= self.now, "horizon {horizon} is before now {}", self.now);
        let mut count = 0;
        while self.queue.peek().is_some_and(|q| q.0.fire_at <= horizon) {
            let Queued(event) = self.queue.pop().expect("peeked");
            let key = event.key();
            if let Some(last) = self.last_dispatched {
                assert!(key > last, "dispatch order violated: {key:?} after {last:?}");
            }
            self.last_dispatched = Some(key);
            self.now = event.fire_at;
            self.dispatched += 1;
            count += 1;
            handler(self, event);
        }
        self.now = horizon;
        count
    }

    /// Total events ever scheduled.
    pub fn scheduled(&self) -> u64 {
        self.next_seq
    }

    /// Total events ever dispatched.
    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    /// Events still waiting, i.e. those beyond the last horizon.
    pub fn pending(&self) -> usize {
        self.queue.len()
    }
}

/// Identifies one stochastic process. Each process draws from its own
/// stream so that adding draws to one never shifts another.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamId {
    Movement,
    Messaging,
    Transactions,
    Service,
    Custom(u64),
}

impl StreamId {
    fn word(self) -> u64 {
        match self {
            StreamId::Movement => 1,
            StreamId::Messaging => 2,
            StreamId::Transactions => 3,
            StreamId::Service => 4,
            StreamId::Custom(n) => 0x1000 + n,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RateError {
    NonPositive(f64),
}

impl fmt::Display for RateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateError::NonPositive(r) => write!(f, "rate must be a positive finite number, got {r}"),
        }
    }
}

impl core::error::Error for RateError {}

/// A seeded ChaCha8 stream. Identical `(seed, id)` pairs give identical
/// sequences on every platform.
#[derive(Clone, Debug)]
pub struct RngStream {
    id: StreamId,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id.word());
        RngStream { id, rng }
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform_open_closed(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Unbiased integer in `0..n`. `n` must be non-zero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Exponential inter-arrival time for `rate` events per millisecond.
    pub fn exponential(&mut self, rate_per_ms: f64) -> Result<SimTime, RateError> {
        check_rate(rate_per_ms)?;
        let u = self.uniform_open_closed();
        Ok(SimTime::from_ms_f64(exponential_from_uniform(u, rate_per_ms)))
    }

    /// Exponential variate in milliseconds, unrounded.
    pub fn exponential_ms(&mut self, rate_per_ms: f64) -> Result<f64, RateError> {
        check_rate(rate_per_ms)?;
        Ok(exponential_from_uniform(self.uniform_open_closed(), rate_per_ms))
    }
}

fn check_rate(rate: f64) -> Result<(), RateError> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(RateError::NonPositive(rate))
    }
}

/// Inverse-transform sample `-ln(u) / rate` for `u` in `(0, 1]`.
pub fn exponential_from_uniform(u: f64, rate: f64) -> f64 {
    // -ln(1) is -0.0; normalise so callers never see a negative zero.
    -libm::log(u) / rate + 0.0
}

/// Free-function form of [`RngStream::exponential`].
pub fn draw_exponential(stream: &mut RngStream, rate_per_ms: f64) -> Result<SimTime, RateError> {
    stream.exponential(rate_per_ms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn singleton_queue_head() {
        let mut e = Engine::new();
        e.schedule(SimTime::from_ms(5), 'e');
        assert_eq!(e.peek(), Some((SimTime::from_ms(5), 0)));
    }

    #[test]
    fn dispatch_by_time_then_seq() {
        let mut e = Engine::new();
        e.schedule(SimTime::from_ms(5), "e1");
        e.schedule(SimTime::from_ms(3), "e2");
        e.schedule(SimTime::from_ms(4), "e3");
        e.schedule(SimTime::from_ms(4), "e4");
        let mut order = Vec::new();
        e.run_until(SimTime::from_ms(10), |_, ev| order.push(ev.payload));
        assert_eq!(order, vec!["e2", "e3", "e4", "e1"]);
    }

    #[test]
    fn empty_run_advances_clock() {
        let mut e: Engine<()> = Engine::new();
        assert_eq!(e.run_until(SimTime::from_ms(100), |_, _| {}), 0);
        assert_eq!(e.now(), SimTime::from_ms(100));
    }

    #[test]
    fn horizon_cuts_dispatch() {
        let mut e = Engine::new();
        for t in 1..=3 {
            e.schedule(SimTime::from_ms(t), t);
        }
        let n = e.run_until(SimTime::from_ms(2), |_, _| {});
        assert_eq!(n, 2);
        assert_eq!(e.now(), SimTime::from_ms(2));
        assert_eq!(e.scheduled(), e.dispatched() + e.pending() as u64);
    }

    #[test]
    fn reentrant_follow_up_inside_horizon() {
        let mut e = Engine::new();
        e.schedule(SimTime::from_ms(1), 0u32);
        let mut seen = Vec::new();
        let n = e.run_until(SimTime::from_ms(10), |eng, ev| {
            seen.push((eng.now(), ev.payload));
            if ev.payload == 0 {
                eng.schedule_in(SimTime::from_ms(1), 1);
            }
        });
        assert_eq!(n, 2);
        assert_eq!(seen, vec![(SimTime::from_ms(1), 0), (SimTime::from_ms(2), 1)]);
    }

    #[test]
    #[should_panic(expected = "past")]
    fn scheduling_in_the_past_panics() {
        let mut e: Engine<()> = Engine::new();
        e.run_until(SimTime::from_ms(10), |_, _| {});
        e.schedule(SimTime::from_ms(9), ());
    }

    #[test]
    fn exponential_boundary_is_zero() {
        assert_eq!(exponential_from_uniform(1.0, 1.0), 0.0);
        assert!(exponential_from_uniform(1.0, 1.0).is_sign_positive());
    }

    #[test]
    fn non_positive_rate_rejected() {
        let mut s = RngStream::new(1, StreamId::Service);
        assert!(s.exponential(0.0).is_err());
        assert!(s.exponential(-1.0).is_err());
        assert!(s.exponential(f64::NAN).is_err());
    }

    #[test]
    fn streams_are_reproducible() {
        let mut a = RngStream::new(42, StreamId::Messaging);
        let mut b = RngStream::new(42, StreamId::Messaging);
        let da: Vec<_> = (0..1000).map(|_| a.exponential(0.1).unwrap()).collect();
        let db: Vec<_> = (0..1000).map(|_| b.exponential(0.1).unwrap()).collect();
        assert_eq!(da, db);
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RngStream::new(42, StreamId::Movement);
        let mut b = RngStream::new(42, StreamId::Transactions);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn exponential_mean_matches_inverse_rate() {
        // Law of large numbers: mean of Exp(0.1/ms) is 10 ms.
        let mut s = RngStream::new(7, StreamId::Messaging);
        let n = 100_000;
        let total: f64 = (0..n).map(|_| s.exponential_ms(0.1).unwrap()).sum();
        let mean = total / n as f64;
        assert!((mean - 10.0).abs() / 10.0 < 0.02, "mean {mean}");
    }

    #[test]
    fn below_stays_in_range() {
        let mut s = RngStream::new(3, StreamId::Custom(9));
        for n in 1..50u64 {
            for _ in 0..20 {
                assert!(s.below(n) < n);
            }
        }
    }

    proptest::proptest! {
        // Causality + liveness accounting over arbitrary schedules.
        #[test]
        fn dispatch_sorted_and_accounted(times in proptest::collection::vec(0u64..1_000, 0..200), horizon in 0u64..1_200) {
            let mut e = Engine::new();
            for (i, t) in times.iter().enumerate() {
                e.schedule(SimTime::from_us(*t), i);
            }
            let mut keys = Vec::new();
            e.run_until(SimTime::from_us(horizon), |_, ev| keys.push(ev.key()));
            proptest::prop_assert!(keys.windows(2).all(|w| w[0] < w[1]));
            proptest::prop_assert_eq!(e.scheduled(), e.dispatched() + e.pending() as u64);
            let expected = times.iter().filter(|t| **t <= horizon).count();
            proptest::prop_assert_eq!(keys.len(), expected);
        }
    }
}
