//! Logical clocks for sequence numbers, local physical clocks for time
//! stamps, and a virtual timeline for deterministic timers.

use std::collections::BTreeMap;
use std::time::Instant;

use thiserror::Error;

use crate::model::{SequenceNumber, SiteId, Tick};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClockError {
    #[error("cannot move time back from {now} to {to}")]
    TimeReversal { now: Tick, to: Tick },
    #[error("tick rate must be positive")]
    InvalidRate,
}

/// Per-flow counter producing sequence numbers 1, 2, 3, ...
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LogicalClock {
    counter: SequenceNumber,
}

impl LogicalClock {
    pub fn new() -> Self {
        LogicalClock::default()
    }

    pub fn next_sequence_number(&mut self) -> SequenceNumber {
        self.counter += 1;
        self.counter
    }

    /// Last number handed out, 0 before the first tick.
    pub fn current(&self) -> SequenceNumber {
        self.counter
    }
}

/// Ticks per second as a positive rational `numer / denom`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TickRate {
    numer: u64,
    denom: u64,
}

impl TickRate {
    pub fn new(numer: u64, denom: u64) -> Result<Self, ClockError> {
        if numer == 0 || denom == 0 {
            return Err(ClockError::InvalidRate);
        }
        Ok(TickRate { numer, denom })
    }

    /// One tick per millisecond.
    pub fn millis() -> Self {
        TickRate {
            numer: 1000,
            denom: 1,
        }
    }

    fn ticks_for_nanos(&self, nanos: u128) -> Tick {
        let ticks = nanos * u128::from(self.numer) / (u128::from(self.denom) * 1_000_000_000);
        Tick::try_from(ticks).unwrap_or(Tick::MAX)
    }
}

#[derive(Debug, Clone)]
enum ClockSource {
    Simulated { current: Tick },
    Live { origin: Instant, rate: TickRate },
}

/// The physical clock of one site. Reads are strictly increasing.
///
/// Simulated clocks run at one tick per abstract time unit and move only
/// when [`LocalPhysicalClock::advance`] is called. Live clocks scale a
/// monotonic wall-clock source by their tick rate.
#[derive(Debug, Clone)]
pub struct LocalPhysicalClock {
    site: SiteId,
    source: ClockSource,
    last: Option<Tick>,
}

impl LocalPhysicalClock {
    pub fn simulated(site: SiteId, start: Tick) -> Self {
        LocalPhysicalClock {
            site,
            source: ClockSource::Simulated { current: start },
            last: None,
        }
    }

    pub fn live(site: SiteId, rate: TickRate) -> Self {
        LocalPhysicalClock {
            site,
            source: ClockSource::Live {
                origin: Instant::now(),
                rate,
            },
            last: None,
        }
    }

    pub fn site(&self) -> &SiteId {
        &self.site
    }

    /// Moves a simulated clock forward. No effect on live clocks.
    pub fn advance(&mut self, by: u64) {
        if let ClockSource::Simulated { current } = &mut self.source {
            *current = current.saturating_add_unsigned(by);
        }
    }

    /// Reading of the underlying source, without the strictness bump.
    pub fn raw(&self) -> Tick {
        match &self.source {
            ClockSource::Simulated { current } => *current,
            ClockSource::Live { origin, rate } => rate.ticks_for_nanos(origin.elapsed().as_nanos()),
        }
    }

    /// Next time stamp. Two reads in the same tick yield distinct stamps.
    pub fn now(&mut self) -> Tick {
        let raw = self.raw();
        let stamp = match self.last {
            Some(last) if raw <= last => last + 1,
            _ => raw,
        };
        self.last = Some(stamp);
        stamp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimerId(pub u64);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiredTimer<T> {
    pub id: TimerId,
    pub fire_at: Tick,
    pub payload: T,
}

/// Pending timers in virtual time, fired by fire tick then creation order.
#[derive(Debug, Clone)]
pub struct VirtualTimeline<T = ()> {
    now: Tick,
    next_id: u64,
    pending: BTreeMap<(Tick, TimerId), T>,
}

impl<T> VirtualTimeline<T> {
    pub fn new(start: Tick) -> Self {
        VirtualTimeline {
            now: start,
            next_id: 0,
            pending: BTreeMap::new(),
        }
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn schedule(&mut self, delay: u64, payload: T) -> TimerId {
        let id = TimerId(self.next_id);
        self.next_id += 1;
        self.pending
            .insert((self.now.saturating_add_unsigned(delay), id), payload);
        id
    }

    pub fn next_deadline(&self) -> Option<Tick> {
        self.pending.keys().next().map(|(at, _)| *at)
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    /// Moves time to `to` and returns every timer due at or before it.
    pub fn advance(&mut self, to: Tick) -> Result<Vec<FiredTimer<T>>, ClockError> {
        if to < self.now {
            return Err(ClockError::TimeReversal { now: self.now, to });
        }
        self.now = to;
        let later = match to.checked_add(1) {
            Some(bound) => self.pending.split_off(&(bound, TimerId(0))),
            None => BTreeMap::new(),
        };
        let due = std::mem::replace(&mut self.pending, later);
        Ok(due
            .into_iter()
            .map(|((fire_at, id), payload)| FiredTimer {
                id,
                fire_at,
                payload,
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn site() -> SiteId {
        SiteId::new("L1").unwrap()
    }

    #[test]
    fn sequence_numbers_start_at_one() {
        let mut c = LogicalClock::new();
        assert_eq!(c.next_sequence_number(), 1);
        c.next_sequence_number();
        c.next_sequence_number();
        assert_eq!(c.next_sequence_number(), 4);
    }

    #[test]
    fn logical_clocks_are_independent() {
        let mut a = LogicalClock::new();
        let mut b = LogicalClock::new();
        assert_eq!(a.next_sequence_number(), 1);
        assert_eq!(b.next_sequence_number(), 1);
    }

    #[test]
    fn simulated_reads_strictly_increase() {
        let mut c = LocalPhysicalClock::simulated(site(), 0);
        let r1 = c.now();
        let r2 = c.now();
        assert!(r2 > r1);
    }

    #[test]
    fn simulated_advance_is_exact() {
        let mut c = LocalPhysicalClock::simulated(site(), 100);
        let before = c.now();
        c.advance(5);
        assert_eq!(c.now(), before + 5);
    }

    #[test]
    fn live_reads_strictly_increase() {
        let mut c = LocalPhysicalClock::live(site(), TickRate::new(1, 1).unwrap());
        let reads: Vec<Tick> = (0..100).map(|_| c.now()).collect();
        assert!(reads.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn zero_rate_rejected() {
        assert_eq!(TickRate::new(0, 1), Err(ClockError::InvalidRate));
    }

    #[test]
    fn timer_fires_at_deadline() {
        let mut tl = VirtualTimeline::new(0);
        let id = tl.schedule(5, ());
        assert!(tl.advance(4).unwrap().is_empty());
        let fired = tl.advance(5).unwrap();
        assert_eq!(fired.len(), 1);
        assert_eq!(fired[0].id, id);
        assert_eq!(fired[0].fire_at, 5);
    }

    #[test]
    fn ties_fire_in_creation_order() {
        let mut tl = VirtualTimeline::new(0);
        let a = tl.schedule(5, "a");
        let b = tl.schedule(5, "b");
        let early = tl.schedule(3, "early");
        let fired: Vec<TimerId> = tl.advance(10).unwrap().into_iter().map(|f| f.id).collect();
        assert_eq!(fired, vec![early, a, b]);
    }

    #[test]
    fn advance_backwards_fails() {
        let mut tl: VirtualTimeline = VirtualTimeline::new(10);
        assert_eq!(
            tl.advance(9),
            Err(ClockError::TimeReversal { now: 10, to: 9 })
        );
    }

    #[test]
    fn replay_is_identical() {
        let run = || {
            let mut tl = VirtualTimeline::new(0);
            let mut log = Vec::new();
            for (i, d) in [7u64, 3, 3, 0, 12, 7].iter().enumerate() {
                tl.schedule(*d, i);
                if i % 2 == 1 {
                    let now = tl.now();
                    log.extend(
                        tl.advance(now + 2)
                            .unwrap()
                            .into_iter()
                            .map(|f| (f.fire_at, f.payload)),
                    );
                }
            }
            log.extend(
                tl.advance(100)
                    .unwrap()
                    .into_iter()
                    .map(|f| (f.fire_at, f.payload)),
            );
            log
        };
        assert_eq!(run(), run());
    }
}
