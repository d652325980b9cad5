//! Offline composition over complete histories.
//!
//! Windows are evaluated directly on the full stamp sequences, with no
//! buffering and no timers. Whatever the engine does online must match this
//! whenever no slice is delayed past `alpha`.

use crate::model::{FlowId, SynchronousFlowHistory, SynchronousSlice, Tick};

use super::{compose_result_slice, FusionError, Policy, PolicyParams};

/// One window of the offline composition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRound {
    pub output_ts: Tick,
    pub t_max: Option<Tick>,
    /// Stamps taken from every input flow, in input order.
    pub used: Vec<(FlowId, Vec<Tick>)>,
}

struct Stream {
    flow: FlowId,
    hard: bool,
    stamps: Vec<Tick>,
    cursor: usize,
}

impl Stream {
    fn remaining(&self) -> &[Tick] {
        &self.stamps[self.cursor..]
    }
}

fn check_inputs(inputs: &[SynchronousFlowHistory]) -> Result<(), FusionError> {
    let first = inputs.first().ok_or(FusionError::EmptyGroup)?;
    for h in inputs {
        if h.site() != first.site() {
            return Err(FusionError::MixedSites(
                first.site().clone(),
                h.site().clone(),
            ));
        }
        if h.is_composed() {
            return Err(FusionError::ForeignUnits {
                flow: h.flow_set()[0].flow_id.clone(),
            });
        }
    }
    Ok(())
}

/// Computes the windows of the composed flow.
pub fn oracle_plan(
    inputs: &[SynchronousFlowHistory],
    params: PolicyParams,
    policy: Policy,
) -> Result<Vec<OracleRound>, FusionError> {
    check_inputs(inputs)?;
    let mut streams: Vec<Stream> = inputs
        .iter()
        .map(|h| Stream {
            flow: h.flow_set()[0].flow_id.clone(),
            hard: h.flow_set()[0].is_hard(),
            stamps: h.slices().iter().map(|s| s.time_stamp).collect(),
            cursor: 0,
        })
        .collect();
    let theta = params.theta();
    let mut rounds = Vec::new();

    // hard-anchored windows
    if policy != Policy::Soft {
        loop {
            // earliest pending stamp over hard flows that still have slices
            let anchors: Vec<&Stream> = streams
                .iter()
                .filter(|s| (policy == Policy::Hard || s.hard) && !s.remaining().is_empty())
                .collect();
            let Some(start) = anchors.iter().map(|s| s.remaining()[0]).min() else {
                break;
            };
            // last occurrence at `start`: largest first-stamp >= start
            let t_max = anchors
                .iter()
                .filter_map(|s| s.remaining().iter().copied().find(|&t| t >= start))
                .max()
                .unwrap_or(start);
            let mut used = Vec::with_capacity(streams.len());
            for s in streams.iter_mut() {
                let taken: Vec<Tick> = s
                    .remaining()
                    .iter()
                    .copied()
                    .take_while(|&t| t <= t_max)
                    .collect();
                s.cursor += taken.len();
                used.push((s.flow.clone(), taken));
            }
            rounds.push(OracleRound {
                output_ts: start,
                t_max: Some(t_max),
                used,
            });
        }
    }

    // soft windows [fo, fo + theta]
    while let Some(first) = streams
        .iter()
        .filter_map(|s| s.remaining().first().copied())
        .min()
    {
        let end = first.saturating_add_unsigned(theta);
        let mut used = Vec::with_capacity(streams.len());
        for s in streams.iter_mut() {
            let taken: Vec<Tick> = s
                .remaining()
                .iter()
                .copied()
                .filter(|&t| t <= end)
                .collect();
            s.cursor += taken.len();
            used.push((s.flow.clone(), taken));
        }
        rounds.push(OracleRound {
            output_ts: first,
            t_max: None,
            used,
        });
    }
    Ok(rounds)
}

/// Offline composed flow for complete input histories.
pub fn oracle_compose(
    inputs: &[SynchronousFlowHistory],
    params: PolicyParams,
    policy: Policy,
) -> Result<SynchronousFlowHistory, FusionError> {
    let rounds = oracle_plan(inputs, params, policy)?;
    let site = inputs[0].site().clone();
    let flow_set = inputs
        .iter()
        .flat_map(|h| h.flow_set().iter().cloned())
        .collect();
    let mut out = SynchronousFlowHistory::new(site, flow_set)?;
    for round in rounds {
        let mut consumed: Vec<&SynchronousSlice> = Vec::new();
        for (h, (_, stamps)) in inputs.iter().zip(&round.used) {
            for &t in stamps {
                let idx = h.index_of_stamp(t).expect("stamp taken from this history");
                consumed.push(&h.slices()[idx]);
            }
        }
        out.push(compose_result_slice(consumed, round.output_ts)?)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Constraint, FlowDescriptor, SiteId};

    fn history(id: &str, c: Constraint, stamps: &[Tick]) -> SynchronousFlowHistory {
        let site = SiteId::new("L1").unwrap();
        let flow = FlowId::new(id).unwrap();
        let desc = FlowDescriptor::new(flow.clone(), "src", site.clone(), c);
        SynchronousFlowHistory::from_slices(
            site.clone(),
            vec![desc],
            stamps
                .iter()
                .map(|&t| SynchronousSlice::single(t, site.clone(), flow.clone(), vec![t as u8])),
        )
        .unwrap()
    }

    fn stamps_of(r: &OracleRound) -> Vec<Vec<Tick>> {
        r.used.iter().map(|(_, s)| s.clone()).collect()
    }

    #[test]
    fn hard_windows() {
        let inputs = [
            history("A", Constraint::Hard, &[0, 10, 20]),
            history("B", Constraint::Hard, &[0, 5, 10, 15]),
        ];
        let plan = oracle_plan(&inputs, PolicyParams::new(10, 0).unwrap(), Policy::Hard).unwrap();
        assert_eq!(stamps_of(&plan[0]), vec![vec![0], vec![0]]);
        assert_eq!((plan[1].output_ts, plan[1].t_max), (5, Some(10)));
        assert_eq!(stamps_of(&plan[1]), vec![vec![10], vec![5, 10]]);
        assert_eq!(stamps_of(&plan[2]), vec![vec![20], vec![15]]);
        assert_eq!(plan.len(), 3);
    }

    #[test]
    fn soft_flow_with_wide_gaps_keeps_one_slice_per_window() {
        let inputs = [history("a", Constraint::Soft, &[0, 11, 30, 45])];
        let plan = oracle_plan(&inputs, PolicyParams::new(10, 0).unwrap(), Policy::Soft).unwrap();
        assert_eq!(plan.len(), 4);
        assert!(plan
            .iter()
            .all(|r| r.used[0].1.len() == 1 && r.t_max.is_none()));
    }

    #[test]
    fn mixed_windows_then_soft_tail() {
        let inputs = [
            history("H", Constraint::Hard, &[0, 10]),
            history("s", Constraint::Soft, &[2, 40]),
        ];
        let plan = oracle_plan(&inputs, PolicyParams::new(10, 0).unwrap(), Policy::Mixed).unwrap();
        assert_eq!(stamps_of(&plan[0]), vec![vec![0], vec![]]);
        assert_eq!(stamps_of(&plan[1]), vec![vec![10], vec![2]]);
        assert_eq!((plan[2].output_ts, plan[2].t_max), (40, None));
    }

    #[test]
    fn empty_flows_give_empty_composition() {
        let inputs = [
            history("A", Constraint::Hard, &[]),
            history("B", Constraint::Hard, &[]),
        ];
        let out = oracle_compose(&inputs, PolicyParams::new(10, 0).unwrap(), Policy::Hard).unwrap();
        assert!(out.is_empty());
        assert!(out.is_composed());
    }

    #[test]
    fn no_flows_is_an_error() {
        assert_eq!(
            oracle_plan(&[], PolicyParams::new(1, 0).unwrap(), Policy::Hard),
            Err(FusionError::EmptyGroup)
        );
    }
}
