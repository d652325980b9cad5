//! Virtual-time execution of a scenario.

use crate::clock::VirtualTimeline;
use crate::fusion::{
    EmissionRecord, EngineEvent, FusionEngine, LateSlice, Policy, PolicyParams, StepOutcome,
    TimerToken,
};
use crate::model::{FlowDescriptor, SynchronousFlowHistory, Tick};
use crate::transport::{ChannelConfig, SimChannel};

use super::scenario::{generate_scenario, Scenario, ScenarioConfig};
use super::trace::{Trace, TraceRecord};
use super::SimError;

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub policy: Policy,
    pub records: Vec<EmissionRecord>,
    pub composed: SynchronousFlowHistory,
    pub side_channel: Vec<LateSlice>,
    /// Tick of the last processed event.
    pub end_tick: Tick,
}

impl SimulationOutput {
    pub fn trace(&self) -> Trace {
        Trace {
            records: self.records.iter().map(TraceRecord::from).collect(),
            side_channel: self.side_channel.clone(),
        }
    }
}

/// A source flow and the channel that carries it.
#[derive(Debug, Clone)]
pub struct FeedSpec {
    pub descriptor: FlowDescriptor,
    pub history: SynchronousFlowHistory,
    pub channel: ChannelConfig,
}

pub fn run_simulation(cfg: &ScenarioConfig) -> Result<SimulationOutput, SimError> {
    let scenario = generate_scenario(cfg)?;
    run_scenario(&scenario, cfg.params()?)
}

/// Runs an already generated scenario, possibly with other parameters than
/// the ones it was generated with.
pub fn run_scenario(
    scenario: &Scenario,
    params: PolicyParams,
) -> Result<SimulationOutput, SimError> {
    let feeds = scenario
        .flows
        .iter()
        .map(|f| FeedSpec {
            descriptor: f.descriptor.clone(),
            history: f.history.clone(),
            channel: f.channel(),
        })
        .collect();
    drive(params, feeds)
}

/// Sends every slice at the tick of its own stamp through its channel and
/// runs the engine until nothing is in flight and no timer is pending.
///
/// Within one tick, arrivals are delivered first (in flow order), then flows
/// whose channel is empty are ended, then due timers fire.
pub fn drive(params: PolicyParams, feeds: Vec<FeedSpec>) -> Result<SimulationOutput, SimError> {
    let mut engine =
        FusionEngine::new(params, feeds.iter().map(|f| f.descriptor.clone()).collect())?;
    let mut channels = Vec::with_capacity(feeds.len());
    let mut start = Tick::MAX;
    for feed in &feeds {
        let mut ch = SimChannel::new(feed.channel);
        for slice in feed.history.slices() {
            ch.send(slice, slice.time_stamp)?;
            start = start.min(slice.time_stamp);
        }
        ch.close();
        channels.push(ch);
    }
    let start = if start == Tick::MAX { 0 } else { start };
    let mut timeline: VirtualTimeline<TimerToken> = VirtualTimeline::new(start);
    let mut ended = vec![false; feeds.len()];
    let mut now = start;

    let apply = |outcome: StepOutcome, timeline: &mut VirtualTimeline<TimerToken>| {
        for t in outcome.timers {
            timeline.schedule(t.delay, t.token);
        }
    };

    loop {
        let next_arrival = channels.iter().filter_map(SimChannel::next_arrival).min();
        let unended = ended.iter().any(|e| !e);
        let next = match (next_arrival, timeline.next_deadline()) {
            (Some(a), Some(d)) => a.min(d),
            (Some(a), None) => a,
            (None, Some(d)) => d,
            (None, None) if unended => now,
            (None, None) => break,
        };
        now = next;
        let fired = timeline.advance(now)?;
        for (i, ch) in channels.iter_mut().enumerate() {
            for (slice, at) in ch.deliver(now)? {
                let flow = feeds[i].descriptor.flow_id.clone();
                let out = engine.step(EngineEvent::SliceArrived {
                    flow,
                    slice,
                    arrival: at,
                })?;
                apply(out, &mut timeline);
            }
        }
        for (i, ch) in channels.iter().enumerate() {
            if !ended[i] && ch.is_finished() {
                ended[i] = true;
                let out = engine.step(EngineEvent::FlowEnded {
                    flow: feeds[i].descriptor.flow_id.clone(),
                    at: now,
                })?;
                apply(out, &mut timeline);
            }
        }
        for timer in fired {
            let out = engine.step(EngineEvent::TimerFired {
                token: timer.payload,
                at: timer.fire_at,
            })?;
            apply(out, &mut timeline);
        }
    }
    debug_assert!(engine.is_drained());

    Ok(SimulationOutput {
        policy: engine.policy(),
        records: engine.records().to_vec(),
        composed: engine.output().clone(),
        side_channel: engine.side_channel().to_vec(),
        end_tick: now,
    })
}
