//! Event-driven implementation of the hard, mixed and soft policies.
//!
//! The engine never blocks. Each "wait until" of a policy becomes a guard that
//! is re-evaluated after every event; a round is emitted as soon as its guard
//! holds. Timers are requested from the driver through [`TimerRequest`]s and
//! come back as [`EngineEvent::TimerFired`].
//!
//! Rounds:
//! - hard: `T_MAX` is the last occurrence over the earliest unconsumed slice
//!   of every live flow; the round closes once every live flow holds a slice
//!   stamped after `T_MAX` (or has ended).
//! - mixed: same window, anchored on hard flows only; soft slices stamped up
//!   to `T_MAX` ride along. Every hard slice used must be authorized by its
//!   own expired `alpha` timer.
//! - soft: window `[fo, fo + theta]` where `fo` is the first occurrence over
//!   buffered slices; every slice used must be authorized by its expired
//!   `alpha + theta` timer.
//!
//! Once every flow has ended the engine drains: remaining slices are emitted
//! with the same window rules, without waiting for timers. In the mixed
//! policy, soft slices left after the last hard slice are drained with soft
//! windows.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{FlowDescriptor, FlowId, SynchronousFlowHistory, SynchronousSlice, Tick};
use crate::occurrence::FlowGroup;

use super::{compose_result_slice, select_policy, FusionError, Policy, PolicyParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimerToken(pub u64);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EngineEvent {
    SliceArrived {
        flow: FlowId,
        slice: SynchronousSlice,
        arrival: Tick,
    },
    TimerFired {
        token: TimerToken,
        at: Tick,
    },
    FlowEnded {
        flow: FlowId,
        at: Tick,
    },
}

/// Ask the driver to fire `token` after `delay` ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimerRequest {
    pub token: TimerToken,
    pub delay: u64,
}

/// A slice that arrived after the window it belonged to was emitted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LateSlice {
    pub flow: FlowId,
    pub stamp: Tick,
    pub arrival: Tick,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmissionRecord {
    /// 1-based position in the composed flow.
    pub index: usize,
    pub output_ts: Tick,
    /// Window bound of hard-anchored rounds, `None` for soft windows.
    pub t_max: Option<Tick>,
    /// Stamps of the source slices used, for every input flow in group order.
    pub used: Vec<(FlowId, Vec<Tick>)>,
    /// Buffered soft slices left out because they are stamped after `t_max`.
    pub too_early: Vec<(FlowId, Vec<Tick>)>,
    /// Late slices included in this round.
    pub late: Vec<LateSlice>,
    pub emitted_at: Tick,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Emission {
    pub slice: SynchronousSlice,
    pub record: EmissionRecord,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepOutcome {
    pub emitted: Vec<Emission>,
    pub timers: Vec<TimerRequest>,
    /// Late slices that fit no future window and were set aside.
    pub side_channel: Vec<LateSlice>,
}

#[derive(Debug, Clone)]
struct Input {
    desc: FlowDescriptor,
    buffer: SynchronousFlowHistory,
    authorized: BTreeSet<Tick>,
    late: BTreeMap<Tick, Tick>,
    last_stamp: Option<Tick>,
    last_arrival: Option<Tick>,
    ended: bool,
}

impl Input {
    fn exhausted(&self) -> bool {
        self.ended && self.buffer.is_empty()
    }

    fn head(&self) -> Option<Tick> {
        self.buffer.first().map(|s| s.time_stamp)
    }

    fn prefix_len(&self, bound: Tick) -> usize {
        self.buffer
            .slices()
            .partition_point(|s| s.time_stamp <= bound)
    }
}

/// Round selected by a guard, ready to be emitted.
struct Round {
    take: Vec<usize>,
    output_ts: Tick,
    t_max: Option<Tick>,
    window_end: Tick,
}

/// The fusion state machine for one group of same-site flows.
#[derive(Debug, Clone)]
pub struct FusionEngine {
    params: PolicyParams,
    policy: Policy,
    inputs: Vec<Input>,
    hard: BTreeSet<FlowId>,
    soft: BTreeSet<FlowId>,
    autorisation: u64,
    timers: BTreeMap<TimerToken, (usize, Tick)>,
    next_token: u64,
    output: SynchronousFlowHistory,
    records: Vec<EmissionRecord>,
    side_channel: Vec<LateSlice>,
    last_output_ts: Option<Tick>,
    window_end: Option<Tick>,
    t_max: Option<Tick>,
    now: Tick,
    drained: bool,
}

impl FusionEngine {
    pub fn new(params: PolicyParams, group: Vec<FlowDescriptor>) -> Result<Self, FusionError> {
        let policy = select_policy(&group)?;
        let mut seen = BTreeSet::new();
        for d in &group {
            if !seen.insert(d.flow_id.clone()) {
                return Err(FusionError::DuplicateFlow(d.flow_id.clone()));
            }
        }
        let site = group[0].site.clone();
        let output = SynchronousFlowHistory::new(site, group.clone())?;
        let (hard, soft): (Vec<_>, Vec<_>) = group.iter().partition(|d| d.is_hard());
        Ok(FusionEngine {
            params,
            policy,
            hard: hard.into_iter().map(|d| d.flow_id.clone()).collect(),
            soft: soft.into_iter().map(|d| d.flow_id.clone()).collect(),
            inputs: group
                .into_iter()
                .map(|desc| Input {
                    buffer: SynchronousFlowHistory::primitive(desc.clone()),
                    desc,
                    authorized: BTreeSet::new(),
                    late: BTreeMap::new(),
                    last_stamp: None,
                    last_arrival: None,
                    ended: false,
                })
                .collect(),
            autorisation: 0,
            timers: BTreeMap::new(),
            next_token: 0,
            output,
            records: Vec::new(),
            side_channel: Vec::new(),
            last_output_ts: None,
            window_end: None,
            t_max: None,
            now: Tick::MIN,
            drained: false,
        })
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn params(&self) -> PolicyParams {
        self.params
    }

    /// The `(hard, soft)` partition of the group.
    pub fn partition(&self) -> (&BTreeSet<FlowId>, &BTreeSet<FlowId>) {
        (&self.hard, &self.soft)
    }

    pub fn flows(&self) -> impl Iterator<Item = &FlowDescriptor> {
        self.inputs.iter().map(|i| &i.desc)
    }

    pub fn autorisation(&self) -> u64 {
        self.autorisation
    }

    /// `T_MAX` of the last hard-anchored round.
    pub fn t_max(&self) -> Option<Tick> {
        self.t_max
    }

    pub fn output(&self) -> &SynchronousFlowHistory {
        &self.output
    }

    pub fn records(&self) -> &[EmissionRecord] {
        &self.records
    }

    pub fn side_channel(&self) -> &[LateSlice] {
        &self.side_channel
    }

    pub fn buffered(&self, flow: &FlowId) -> usize {
        self.index_of(flow)
            .map(|i| self.inputs[i].buffer.len())
            .unwrap_or(0)
    }

    pub fn is_drained(&self) -> bool {
        self.drained
    }

    fn index_of(&self, flow: &FlowId) -> Option<usize> {
        self.inputs.iter().position(|i| &i.desc.flow_id == flow)
    }

    pub fn step(&mut self, event: EngineEvent) -> Result<StepOutcome, FusionError> {
        let mut outcome = StepOutcome::default();
        match event {
            EngineEvent::SliceArrived {
                flow,
                slice,
                arrival,
            } => self.on_slice(flow, slice, arrival, &mut outcome)?,
            EngineEvent::TimerFired { token, at } => {
                self.now = self.now.max(at);
                let (idx, stamp) = self
                    .timers
                    .remove(&token)
                    .ok_or(FusionError::UnknownTimer(token.0))?;
                let input = &mut self.inputs[idx];
                // timers of slices already consumed by a drain are stale
                if input.buffer.index_of_stamp(stamp).is_some() && input.authorized.insert(stamp) {
                    self.autorisation += 1;
                }
            }
            EngineEvent::FlowEnded { flow, at } => {
                self.now = self.now.max(at);
                let idx = self
                    .index_of(&flow)
                    .ok_or_else(|| FusionError::UnknownFlow(flow.clone()))?;
                if self.inputs[idx].ended {
                    return Err(FusionError::FlowAlreadyEnded(flow));
                }
                self.inputs[idx].ended = true;
            }
        }
        self.advance_rounds(&mut outcome)?;
        Ok(outcome)
    }

    fn on_slice(
        &mut self,
        flow: FlowId,
        slice: SynchronousSlice,
        arrival: Tick,
        outcome: &mut StepOutcome,
    ) -> Result<(), FusionError> {
        let idx = self
            .index_of(&flow)
            .ok_or_else(|| FusionError::UnknownFlow(flow.clone()))?;
        let input = &self.inputs[idx];
        if input.ended {
            return Err(FusionError::FlowAlreadyEnded(flow));
        }
        if slice.units.keys().any(|k| k != &flow) {
            return Err(FusionError::ForeignUnits { flow });
        }
        if let Some(last) = input.last_stamp.filter(|&l| slice.time_stamp <= l) {
            return Err(FusionError::NonMonotonicStamps {
                flow,
                last,
                stamp: slice.time_stamp,
            });
        }
        if let Some(last) = input.last_arrival.filter(|&l| arrival < l) {
            return Err(FusionError::NonMonotonicArrival {
                flow,
                last,
                arrival,
            });
        }
        let stamp = slice.time_stamp;
        let is_late = self.window_end.is_some_and(|end| stamp <= end);
        if is_late && !self.fits_future_window(stamp) {
            // validate before setting aside so malformed slices still fail
            crate::model::validate_slice_with(&slice, std::slice::from_ref(&input.desc))
                .map_err(crate::model::ModelError::InvalidSlice)?;
            let input = &mut self.inputs[idx];
            input.last_stamp = Some(stamp);
            input.last_arrival = Some(arrival);
            self.now = self.now.max(arrival);
            let late = LateSlice {
                flow,
                stamp,
                arrival,
            };
            self.side_channel.push(late.clone());
            outcome.side_channel.push(late);
            return Ok(());
        }

        let input = &mut self.inputs[idx];
        input.buffer.push(slice)?;
        input.last_stamp = Some(stamp);
        input.last_arrival = Some(arrival);
        if is_late {
            input.late.insert(stamp, arrival);
        }
        self.now = self.now.max(arrival);

        let delay = match self.policy {
            Policy::Hard => None,
            Policy::Mixed if self.inputs[idx].desc.is_hard() => Some(self.params.alpha()),
            Policy::Mixed => None,
            Policy::Soft => Some(self.params.alpha() + self.params.theta()),
        };
        if let Some(delay) = delay {
            let token = TimerToken(self.next_token);
            self.next_token += 1;
            self.timers.insert(token, (idx, stamp));
            outcome.timers.push(TimerRequest { token, delay });
        }
        Ok(())
    }

    /// Whether a late slice stamped `stamp` can still join a future round.
    fn fits_future_window(&self, stamp: Tick) -> bool {
        let anchored = self.policy == Policy::Mixed
            && self
                .inputs
                .iter()
                .any(|i| i.desc.is_hard() && !i.exhausted());
        // hard-anchored rounds take every slice up to T_MAX; soft windows
        // start at the slice itself and must not precede the last output
        anchored || self.last_output_ts.is_none_or(|last| stamp > last)
    }

    fn advance_rounds(&mut self, outcome: &mut StepOutcome) -> Result<(), FusionError> {
        if self.drained {
            return Ok(());
        }
        if self.inputs.iter().all(|i| i.ended) {
            return self.drain(outcome);
        }
        loop {
            let round = match self.policy {
                Policy::Hard | Policy::Mixed => self.anchored_round(false)?,
                Policy::Soft => self.soft_round(false)?,
            };
            match round {
                Some(round) => self.emit(round, outcome)?,
                None => return Ok(()),
            }
        }
    }

    fn drain(&mut self, outcome: &mut StepOutcome) -> Result<(), FusionError> {
        self.autorisation = 0;
        for input in &mut self.inputs {
            input.authorized.clear();
        }
        if self.policy != Policy::Soft {
            while let Some(round) = self.anchored_round(true)? {
                self.emit(round, outcome)?;
            }
        }
        self.set_aside_stale(outcome);
        while let Some(round) = self.soft_round(true)? {
            self.emit(round, outcome)?;
        }
        self.drained = true;
        Ok(())
    }

    /// Moves buffered slices that cannot anchor a soft window to the side channel.
    fn set_aside_stale(&mut self, outcome: &mut StepOutcome) {
        let Some(last) = self.last_output_ts else {
            return;
        };
        for input in &mut self.inputs {
            let n = input.prefix_len(last);
            for slice in input.buffer.take_front(n) {
                let arrival = input
                    .late
                    .remove(&slice.time_stamp)
                    .or(input.last_arrival)
                    .unwrap_or(self.now);
                let late = LateSlice {
                    flow: input.desc.flow_id.clone(),
                    stamp: slice.time_stamp,
                    arrival,
                };
                self.side_channel.push(late.clone());
                outcome.side_channel.push(late);
            }
        }
    }

    /// Guard of a hard-anchored round (hard policy, or mixed on hard flows).
    fn anchored_round(&self, draining: bool) -> Result<Option<Round>, FusionError> {
        let anchors: Vec<usize> = (0..self.inputs.len())
            .filter(|&i| self.inputs[i].desc.is_hard() && !self.inputs[i].exhausted())
            .collect();
        if anchors.is_empty() {
            return Ok(None);
        }
        // wait until every live anchor has at least one slice
        let Some(start) = anchors
            .iter()
            .map(|&i| self.inputs[i].head())
            .collect::<Option<Vec<Tick>>>()
            .and_then(|heads| heads.into_iter().min())
        else {
            return Ok(None);
        };
        let group = FlowGroup::new(anchors.iter().map(|&i| &self.inputs[i].buffer).collect())?;
        let t_max = group.last_occurrence(start)?;
        let output_ts = group.first_occurrence(start)?;
        // wait until every live anchor holds a slice stamped after T_MAX
        let complete = anchors.iter().all(|&i| {
            let input = &self.inputs[i];
            input.ended || input.buffer.last().is_some_and(|s| s.time_stamp > t_max)
        });
        if !complete {
            return Ok(None);
        }
        let take: Vec<usize> = self.inputs.iter().map(|i| i.prefix_len(t_max)).collect();
        if self.policy == Policy::Mixed && !draining {
            let authorized = anchors.iter().all(|&i| {
                let input = &self.inputs[i];
                input.buffer.slices()[..take[i]]
                    .iter()
                    .all(|s| input.authorized.contains(&s.time_stamp))
            });
            if self.autorisation == 0 || !authorized {
                return Ok(None);
            }
        }
        Ok(Some(Round {
            take,
            output_ts,
            t_max: Some(t_max),
            window_end: t_max,
        }))
    }

    /// Guard of a soft window round.
    fn soft_round(&self, draining: bool) -> Result<Option<Round>, FusionError> {
        let buffered: Vec<&SynchronousFlowHistory> = self
            .inputs
            .iter()
            .filter(|i| !i.buffer.is_empty())
            .map(|i| &i.buffer)
            .collect();
        if buffered.is_empty() {
            return Ok(None);
        }
        let first = FlowGroup::new(buffered)?.first_occurrence(Tick::MIN)?;
        let window_end = first.saturating_add_unsigned(self.params.theta());
        let take: Vec<usize> = self
            .inputs
            .iter()
            .map(|i| i.prefix_len(window_end))
            .collect();
        if !draining {
            let authorized = self.inputs.iter().zip(&take).all(|(input, &n)| {
                input.buffer.slices()[..n]
                    .iter()
                    .all(|s| input.authorized.contains(&s.time_stamp))
            });
            if self.autorisation == 0 || !authorized {
                return Ok(None);
            }
        }
        Ok(Some(Round {
            take,
            output_ts: first,
            t_max: None,
            window_end,
        }))
    }

    fn emit(&mut self, round: Round, outcome: &mut StepOutcome) -> Result<(), FusionError> {
        let mut consumed = Vec::new();
        let mut used = Vec::with_capacity(self.inputs.len());
        let mut late = Vec::new();
        for (input, &n) in self.inputs.iter_mut().zip(&round.take) {
            let slices = input.buffer.take_front(n);
            let stamps: Vec<Tick> = slices.iter().map(|s| s.time_stamp).collect();
            for stamp in &stamps {
                if input.authorized.remove(stamp) {
                    self.autorisation -= 1;
                }
                if let Some(arrival) = input.late.remove(stamp) {
                    late.push(LateSlice {
                        flow: input.desc.flow_id.clone(),
                        stamp: *stamp,
                        arrival,
                    });
                }
            }
            used.push((input.desc.flow_id.clone(), stamps));
            consumed.extend(slices);
        }
        let slice = compose_result_slice(&consumed, round.output_ts)?;
        self.output.push(slice.clone())?;

        let too_early = if round.t_max.is_some() {
            self.inputs
                .iter()
                .filter(|i| !i.desc.is_hard() && !i.buffer.is_empty())
                .map(|i| {
                    let stamps = i.buffer.slices().iter().map(|s| s.time_stamp).collect();
                    (i.desc.flow_id.clone(), stamps)
                })
                .collect()
        } else {
            Vec::new()
        };

        if round.t_max.is_some() {
            self.t_max = round.t_max;
        }
        self.last_output_ts = Some(round.output_ts);
        self.window_end = Some(round.window_end);
        let record = EmissionRecord {
            index: self.records.len() + 1,
            output_ts: round.output_ts,
            t_max: round.t_max,
            used,
            too_early,
            late,
            emitted_at: self.now,
        };
        self.records.push(record.clone());
        outcome.emitted.push(Emission { slice, record });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Constraint, SiteId};

    fn site() -> SiteId {
        SiteId::new("L1").unwrap()
    }

    fn fid(id: &str) -> FlowId {
        FlowId::new(id).unwrap()
    }

    fn desc(id: &str, c: Constraint) -> FlowDescriptor {
        FlowDescriptor::new(fid(id), "src", site(), c)
    }

    fn arrive(flow: &str, t: Tick, at: Tick) -> EngineEvent {
        EngineEvent::SliceArrived {
            flow: fid(flow),
            slice: SynchronousSlice::single(t, site(), fid(flow), t.to_le_bytes().to_vec()),
            arrival: at,
        }
    }

    fn ended(flow: &str, at: Tick) -> EngineEvent {
        EngineEvent::FlowEnded {
            flow: fid(flow),
            at,
        }
    }

    fn used(rec: &EmissionRecord, flow: &str) -> Vec<Tick> {
        rec.used
            .iter()
            .find(|(f, _)| f == &fid(flow))
            .map(|(_, s)| s.clone())
            .unwrap()
    }

    fn hard_engine(flows: &[&str]) -> FusionEngine {
        FusionEngine::new(
            PolicyParams::new(20, 5).unwrap(),
            flows.iter().map(|f| desc(f, Constraint::Hard)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn hard_pairs_interleaved_flows() {
        let mut e = hard_engine(&["A", "B"]);
        let mut emitted = Vec::new();
        for (f, t) in [
            ("A", 0),
            ("B", 1),
            ("A", 10),
            ("B", 11),
            ("A", 20),
            ("B", 21),
        ] {
            emitted.extend(e.step(arrive(f, t, t)).unwrap().emitted);
        }
        assert_eq!(emitted.len(), 2);
        let first = &emitted[0].record;
        assert_eq!((first.output_ts, first.t_max), (0, Some(1)));
        assert_eq!((used(first, "A"), used(first, "B")), (vec![0], vec![1]));
        let second = &emitted[1].record;
        assert_eq!((second.output_ts, second.t_max), (10, Some(11)));
        assert_eq!((used(second, "A"), used(second, "B")), (vec![10], vec![11]));
    }

    #[test]
    fn hard_gathers_several_slices_of_a_faster_flow() {
        let mut e = hard_engine(&["A", "B"]);
        let mut emitted = Vec::new();
        for (f, t) in [
            ("A", 0),
            ("B", 0),
            ("B", 5),
            ("A", 10),
            ("B", 10),
            ("B", 15),
            ("A", 20),
        ] {
            emitted.extend(e.step(arrive(f, t, t)).unwrap().emitted);
        }
        assert_eq!(emitted.len(), 2);
        let second = &emitted[1];
        assert_eq!(second.record.t_max, Some(10));
        assert_eq!(second.record.output_ts, 5);
        assert_eq!(used(&second.record, "A"), vec![10]);
        assert_eq!(used(&second.record, "B"), vec![5, 10]);
        let b_units = second.slice.units_of(&fid("B"));
        assert_eq!(
            b_units
                .iter()
                .map(|u| u.sequence_number)
                .collect::<Vec<_>>(),
            vec![1, 2]
        );
        assert_eq!(b_units[0].samples[0].payload, 5i64.to_le_bytes().to_vec());
    }

    #[test]
    fn hard_waits_for_every_flow() {
        let mut e = hard_engine(&["A", "B"]);
        for t in [0, 10, 20, 30] {
            assert!(e.step(arrive("A", t, t)).unwrap().emitted.is_empty());
        }
        assert_eq!(e.buffered(&fid("A")), 4);
    }

    #[test]
    fn hard_drains_finite_flows() {
        let mut e = hard_engine(&["A", "B"]);
        for ev in [arrive("A", 0, 0), arrive("B", 1, 1), ended("A", 2)] {
            e.step(ev).unwrap();
        }
        // B still live, A ended: round closes once B moves past T_MAX or ends
        assert!(e.records().is_empty());
        let out = e.step(ended("B", 3)).unwrap();
        assert_eq!(out.emitted.len(), 1);
        assert!(e.is_drained());
        assert_eq!(e.output().len(), 1);
    }

    #[test]
    fn mixed_soft_slice_too_early() {
        let params = PolicyParams::new(20, 5).unwrap();
        let mut e = FusionEngine::new(
            params,
            vec![desc("H", Constraint::Hard), desc("s", Constraint::Soft)],
        )
        .unwrap();
        let mut timers = Vec::new();
        let out = e.step(arrive("H", 0, 0)).unwrap();
        assert_eq!(out.timers.len(), 1);
        assert_eq!(out.timers[0].delay, 5);
        timers.extend(out.timers);
        assert!(e.step(arrive("s", 2, 2)).unwrap().timers.is_empty());
        let fired = e
            .step(EngineEvent::TimerFired {
                token: timers[0].token,
                at: 5,
            })
            .unwrap();
        assert!(fired.emitted.is_empty());
        assert_eq!(e.autorisation(), 1);
        let out = e.step(arrive("H", 10, 10)).unwrap();
        timers.extend(out.timers.clone());
        assert_eq!(out.emitted.len(), 1);
        let rec = &out.emitted[0].record;
        assert_eq!((rec.output_ts, rec.t_max), (0, Some(0)));
        assert_eq!(used(rec, "H"), vec![0]);
        assert_eq!(used(rec, "s"), Vec::<Tick>::new());
        assert_eq!(rec.too_early, vec![(fid("s"), vec![2])]);
        assert_eq!(e.autorisation(), 0);

        e.step(ended("H", 11)).unwrap();
        e.step(ended("s", 11)).unwrap();
        let rec = e.records().last().unwrap();
        assert_eq!(rec.t_max, Some(10));
        assert_eq!(used(rec, "H"), vec![10]);
        assert_eq!(used(rec, "s"), vec![2]);
    }

    #[test]
    fn mixed_waits_for_authorization() {
        let mut e = FusionEngine::new(
            PolicyParams::new(20, 5).unwrap(),
            vec![desc("H", Constraint::Hard), desc("s", Constraint::Soft)],
        )
        .unwrap();
        e.step(arrive("H", 0, 0)).unwrap();
        let out = e.step(arrive("H", 10, 10)).unwrap();
        assert!(out.emitted.is_empty(), "no timer expired yet");
    }

    #[test]
    fn soft_window_closes_on_timer() {
        let mut e = FusionEngine::new(
            PolicyParams::new(10, 0).unwrap(),
            vec![desc("s", Constraint::Soft)],
        )
        .unwrap();
        let t0 = e.step(arrive("s", 0, 0)).unwrap().timers[0];
        assert_eq!(t0.delay, 10);
        e.step(arrive("s", 100, 100)).unwrap();
        let out = e
            .step(EngineEvent::TimerFired {
                token: t0.token,
                at: 10,
            })
            .unwrap();
        assert_eq!(out.emitted.len(), 1);
        let rec = &out.emitted[0].record;
        assert_eq!((rec.output_ts, rec.t_max), (0, None));
        assert_eq!(used(rec, "s"), vec![0]);
    }

    #[test]
    fn soft_late_slice_goes_to_side_channel() {
        let mut e = FusionEngine::new(
            PolicyParams::new(10, 0).unwrap(),
            vec![desc("a", Constraint::Soft), desc("b", Constraint::Soft)],
        )
        .unwrap();
        let t = e.step(arrive("a", 0, 0)).unwrap().timers[0];
        e.step(EngineEvent::TimerFired {
            token: t.token,
            at: 10,
        })
        .unwrap();
        assert_eq!(e.records().len(), 1);
        // b@0 should have been in the window that closed at 10
        let out = e.step(arrive("b", 0, 30)).unwrap();
        assert_eq!(
            out.side_channel,
            vec![LateSlice {
                flow: fid("b"),
                stamp: 0,
                arrival: 30
            }]
        );
        // b@5 is late too but can still anchor a window after the last output
        let out = e.step(arrive("b", 5, 31)).unwrap();
        assert!(out.side_channel.is_empty());
        e.step(ended("a", 32)).unwrap();
        e.step(ended("b", 32)).unwrap();
        let rec = e.records().last().unwrap();
        assert_eq!(rec.output_ts, 5);
        assert_eq!(rec.late.len(), 1);
    }

    #[test]
    fn errors_on_bad_events() {
        let mut e = hard_engine(&["A"]);
        assert!(matches!(
            e.step(arrive("Z", 0, 0)),
            Err(FusionError::UnknownFlow(_))
        ));
        e.step(arrive("A", 5, 5)).unwrap();
        assert!(matches!(
            e.step(arrive("A", 5, 6)),
            Err(FusionError::NonMonotonicStamps { .. })
        ));
        assert!(matches!(
            e.step(arrive("A", 6, 4)),
            Err(FusionError::NonMonotonicArrival { .. })
        ));
        assert!(matches!(
            e.step(EngineEvent::TimerFired {
                token: TimerToken(99),
                at: 9
            }),
            Err(FusionError::UnknownTimer(99))
        ));
        let foreign = EngineEvent::SliceArrived {
            flow: fid("A"),
            slice: SynchronousSlice::single(7, site(), fid("B"), vec![]),
            arrival: 7,
        };
        assert!(matches!(
            e.step(foreign),
            Err(FusionError::ForeignUnits { .. })
        ));
        e.step(ended("A", 8)).unwrap();
        assert!(matches!(
            e.step(ended("A", 9)),
            Err(FusionError::FlowAlreadyEnded(_))
        ));
        assert!(matches!(
            e.step(arrive("A", 10, 10)),
            Err(FusionError::FlowAlreadyEnded(_))
        ));
    }

    #[test]
    fn duplicate_flows_rejected() {
        assert!(matches!(
            FusionEngine::new(
                PolicyParams::new(1, 0).unwrap(),
                vec![desc("A", Constraint::Hard), desc("A", Constraint::Hard)]
            ),
            Err(FusionError::DuplicateFlow(_))
        ));
    }

    #[test]
    fn partition_covers_group() {
        let e = FusionEngine::new(
            PolicyParams::new(1, 0).unwrap(),
            vec![
                desc("A", Constraint::Hard),
                desc("b", Constraint::Soft),
                desc("C", Constraint::Hard),
            ],
        )
        .unwrap();
        let (hard, soft) = e.partition();
        assert_eq!(hard.len() + soft.len(), 3);
        assert!(hard.is_disjoint(soft));
        assert_eq!(e.policy(), Policy::Mixed);
    }
}
