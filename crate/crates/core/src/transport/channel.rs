//! Point-to-point channel with seeded delay and jitter, in virtual time.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{SynchronousSlice, Tick};

use super::wire::{decode_slice, encode_slice};
use super::TransportError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    /// Delivery in virtual time, driven by the simulator.
    Simulated,
    /// Delivery over a TCP stream in wall-clock time.
    Socket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelConfig {
    pub base_delay: u64,
    pub jitter_bound: u64,
    pub seed: u64,
    pub mode: ChannelMode,
}

impl ChannelConfig {
    pub fn simulated(base_delay: u64, jitter_bound: u64, seed: u64) -> Self {
        ChannelConfig {
            base_delay,
            jitter_bound,
            seed,
            mode: ChannelMode::Simulated,
        }
    }

    /// The raw per-message delays this configuration draws, before the FIFO
    /// clamp, for the first `count` messages.
    pub fn delays(&self, count: usize) -> Vec<u64> {
        let mut draws = JitterSource::new(self);
        (0..count).map(|_| draws.next_delay()).collect()
    }
}

struct JitterSource {
    rng: ChaCha8Rng,
    base: u64,
    bound: u64,
}

impl JitterSource {
    fn new(config: &ChannelConfig) -> Self {
        JitterSource {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            base: config.base_delay,
            bound: config.jitter_bound,
        }
    }

    fn next_delay(&mut self) -> u64 {
        self.base + self.rng.random_range(0..=self.bound)
    }
}

impl std::fmt::Debug for JitterSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JitterSource")
            .field("base", &self.base)
            .field("bound", &self.bound)
            .finish()
    }
}

/// Simulated conduit. Slices travel encoded and are decoded on delivery.
/// Messages never overtake each other.
#[derive(Debug)]
pub struct SimChannel {
    config: ChannelConfig,
    jitter: JitterSource,
    in_flight: VecDeque<(Vec<u8>, Tick)>,
    last_arrival: Option<Tick>,
    sent: u64,
    closed: bool,
}

impl SimChannel {
    pub fn new(config: ChannelConfig) -> Self {
        SimChannel {
            jitter: JitterSource::new(&config),
            config,
            in_flight: VecDeque::new(),
            last_arrival: None,
            sent: 0,
            closed: false,
        }
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    /// Queues a slice sent at `send_tick` and returns its arrival tick.
    pub fn send(
        &mut self,
        slice: &SynchronousSlice,
        send_tick: Tick,
    ) -> Result<Tick, TransportError> {
        if self.closed {
            return Err(TransportError::ChannelClosed);
        }
        let bytes = encode_slice(slice)?;
        let raw = send_tick.saturating_add_unsigned(self.jitter.next_delay());
        let arrival = self.last_arrival.map_or(raw, |last| raw.max(last));
        self.last_arrival = Some(arrival);
        self.in_flight.push_back((bytes, arrival));
        self.sent += 1;
        Ok(arrival)
    }

    /// Removes and decodes every slice arriving at or before `up_to`.
    pub fn deliver(
        &mut self,
        up_to: Tick,
    ) -> Result<Vec<(SynchronousSlice, Tick)>, TransportError> {
        let mut out = Vec::new();
        while self.in_flight.front().is_some_and(|(_, at)| *at <= up_to) {
            let (bytes, at) = self.in_flight.pop_front().expect("front checked");
            out.push((decode_slice(&bytes)?, at));
        }
        Ok(out)
    }

    pub fn next_arrival(&self) -> Option<Tick> {
        self.in_flight.front().map(|(_, at)| *at)
    }

    pub fn sent(&self) -> u64 {
        self.sent
    }

    /// No further sends. Slices in flight are still delivered.
    pub fn close(&mut self) {
        self.closed = true;
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Closed and nothing left in flight.
    pub fn is_finished(&self) -> bool {
        self.closed && self.in_flight.is_empty()
    }
}
