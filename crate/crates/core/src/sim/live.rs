//! Wall-clock demo: a scenario replayed over TCP into a live engine.

use std::io::Write;
use std::net::{TcpListener, ToSocketAddrs};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::time::{Duration, Instant};

use crate::clock::{LocalPhysicalClock, TickRate, VirtualTimeline};
use crate::fusion::{EngineEvent, FusionEngine, LateSlice, PolicyParams, StepOutcome, TimerToken};
use crate::model::{SiteId, SynchronousSlice, Tick};
use crate::transport::socket::{Announcement, Inbound, SocketReceiver, SocketSender};

use super::scenario::{generate_scenario, ScenarioConfig};
use super::trace::{emit_record, TraceRecord};
use super::SimError;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ServeSummary {
    pub received: usize,
    pub emitted: usize,
    pub side_channel: Vec<LateSlice>,
}

fn tick_rate(tick: Duration) -> Result<TickRate, SimError> {
    let micros = u64::try_from(tick.as_micros()).unwrap_or(u64::MAX);
    TickRate::new(1_000_000, micros).map_err(|e| SimError::InvalidConfig(e.to_string()))
}

/// Accepts one client, fuses its flows in real time and writes one trace line
/// per composed slice to `sink` as soon as it is emitted.
pub fn serve(
    listener: &TcpListener,
    params: PolicyParams,
    tick: Duration,
    sink: &mut dyn Write,
) -> Result<ServeSummary, SimError> {
    let receiver = SocketReceiver::accept(listener)?;
    let announcement = receiver.announcement().clone();
    let mut engine = FusionEngine::new(params, announcement.descriptors("remote"))?;
    let clock = LocalPhysicalClock::live(announcement.site.clone(), tick_rate(tick)?);
    let mut timeline: VirtualTimeline<TimerToken> = VirtualTimeline::new(0);
    let (tx, rx) = mpsc::channel();
    let reader = receiver.spawn_forwarder(tx);
    let mut summary = ServeSummary::default();
    writeln!(sink, "# korrontea trace v1")?;

    let record = |out: StepOutcome,
                  timeline: &mut VirtualTimeline<TimerToken>,
                  summary: &mut ServeSummary,
                  sink: &mut dyn Write|
     -> Result<(), SimError> {
        for t in out.timers {
            timeline.schedule(t.delay, t.token);
        }
        for e in out.emitted {
            writeln!(sink, "{}", emit_record(&TraceRecord::from(&e.record)))?;
            summary.emitted += 1;
        }
        sink.flush()?;
        Ok(())
    };

    let mut open = true;
    while open || timeline.pending() > 0 {
        let now = clock.raw().max(timeline.now());
        let wait = match timeline.next_deadline() {
            Some(d) => tick.saturating_mul(u32::try_from((d - now).max(0)).unwrap_or(u32::MAX)),
            None => Duration::from_secs(3600),
        };
        let msg = if open {
            match rx.recv_timeout(wait) {
                Ok(m) => Some(m),
                Err(RecvTimeoutError::Timeout) => None,
                Err(RecvTimeoutError::Disconnected) => Some(Inbound::Closed),
            }
        } else {
            std::thread::sleep(wait);
            None
        };
        let now = clock.raw().max(timeline.now());
        let fired = timeline.advance(now)?;
        match msg {
            Some(Inbound::Slice(slice)) => {
                summary.received += 1;
                let flow = slice
                    .units
                    .keys()
                    .next()
                    .cloned()
                    .ok_or_else(|| SimError::Io("received an empty slice".into()))?;
                let out = engine.step(EngineEvent::SliceArrived {
                    flow,
                    slice,
                    arrival: now,
                })?;
                record(out, &mut timeline, &mut summary, sink)?;
            }
            Some(Inbound::Closed) => {
                open = false;
                for (id, _) in &announcement.flows {
                    let out = engine.step(EngineEvent::FlowEnded {
                        flow: id.clone(),
                        at: now,
                    })?;
                    record(out, &mut timeline, &mut summary, sink)?;
                }
            }
            Some(Inbound::Failed(e)) => return Err(e.into()),
            None => {}
        }
        for t in fired {
            let out = engine.step(EngineEvent::TimerFired {
                token: t.payload,
                at: t.fire_at,
            })?;
            record(out, &mut timeline, &mut summary, sink)?;
        }
        if engine.is_drained() {
            break;
        }
    }
    let _ = reader.join();
    for l in engine.side_channel() {
        writeln!(sink, "LATE {} {}@{}", l.flow, l.stamp, l.arrival)?;
    }
    sink.flush()?;
    summary.side_channel = engine.side_channel().to_vec();
    Ok(summary)
}

/// Replays the scenario of `cfg` to a server: every slice is sent when its
/// simulated arrival tick is reached on the wall clock. Returns the number of
/// slices sent.
pub fn feed(
    addr: impl ToSocketAddrs,
    cfg: &ScenarioConfig,
    tick: Duration,
) -> Result<usize, SimError> {
    let scenario = generate_scenario(cfg)?;
    let mut schedule: Vec<(Tick, usize, &SynchronousSlice)> = Vec::new();
    for (i, f) in scenario.flows.iter().enumerate() {
        for (slice, at) in f.history.slices().iter().zip(f.arrivals()) {
            schedule.push((at, i, slice));
        }
    }
    schedule.sort_by_key(|(at, i, s)| (*at, *i, s.time_stamp));
    let site = SiteId::new(cfg.site.clone()).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let announcement = Announcement::from_descriptors(site, &scenario.descriptors());
    let mut sender = SocketSender::connect(addr, &announcement)?;
    let origin = Instant::now();
    let first = schedule.first().map(|(at, _, _)| *at).unwrap_or(0);
    for (at, _, slice) in &schedule {
        let offset = u32::try_from(at - first).unwrap_or(u32::MAX);
        let due = origin + tick.saturating_mul(offset);
        if let Some(d) = due.checked_duration_since(Instant::now()) {
            std::thread::sleep(d);
        }
        sender.send(slice)?;
    }
    sender.finish()?;
    Ok(schedule.len())
}
