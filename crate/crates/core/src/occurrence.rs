//! Time-stamp algebra over sets of slices and groups of synchronous flows.

use thiserror::Error;

use crate::model::{SiteId, SynchronousFlowHistory, SynchronousSlice, Tick};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OccurrenceError {
    #[error("empty set of slices")]
    EmptySet,
    #[error("slices from sites {0} and {1} cannot be combined")]
    MixedSites(SiteId, SiteId),
    #[error("no slice stamped at or after {0}")]
    NoQualifyingSlice(Tick),
    #[error("flow {flow} has no slice stamped at or after {t}")]
    FlowWithoutQualifyingSlice { flow: String, t: Tick },
    #[error("a flow group needs at least one flow")]
    EmptyGroup,
}

fn stamp_extreme<'a, I>(slices: I, pick: fn(Tick, Tick) -> Tick) -> Result<Tick, OccurrenceError>
where
    I: IntoIterator<Item = &'a SynchronousSlice>,
{
    let mut iter = slices.into_iter();
    let first = iter.next().ok_or(OccurrenceError::EmptySet)?;
    iter.try_fold(first.time_stamp, |acc, s| {
        if s.site != first.site {
            return Err(OccurrenceError::MixedSites(
                first.site.clone(),
                s.site.clone(),
            ));
        }
        Ok(pick(acc, s.time_stamp))
    })
}

/// Smallest stamp of a non-empty set of same-site slices.
pub fn minimal_time_stamp<'a, I>(slices: I) -> Result<Tick, OccurrenceError>
where
    I: IntoIterator<Item = &'a SynchronousSlice>,
{
    stamp_extreme(slices, std::cmp::min)
}

/// Greatest stamp of a non-empty set of same-site slices.
pub fn maximal_time_stamp<'a, I>(slices: I) -> Result<Tick, OccurrenceError>
where
    I: IntoIterator<Item = &'a SynchronousSlice>,
{
    stamp_extreme(slices, std::cmp::max)
}

/// The first slice of `flow` stamped at or after `t`.
///
/// A slice qualifies when its stamp is `>= t` and its predecessor is stamped
/// `< t`. The head of a history has no predecessor and counts as qualifying.
pub fn first_slice(flow: &SynchronousFlowHistory, t: Tick) -> Option<&SynchronousSlice> {
    let slices = flow.slices();
    let idx = slices.partition_point(|s| s.time_stamp < t);
    slices.get(idx)
}

/// A set of synchronous flows located on the same site.
#[derive(Debug, Clone)]
pub struct FlowGroup<'a> {
    flows: Vec<&'a SynchronousFlowHistory>,
    site: SiteId,
}

impl<'a> FlowGroup<'a> {
    pub fn new(flows: Vec<&'a SynchronousFlowHistory>) -> Result<Self, OccurrenceError> {
        let site = flows
            .first()
            .ok_or(OccurrenceError::EmptyGroup)?
            .site()
            .clone();
        if let Some(other) = flows.iter().find(|f| f.site() != &site) {
            return Err(OccurrenceError::MixedSites(site, other.site().clone()));
        }
        Ok(FlowGroup { flows, site })
    }

    pub fn site(&self) -> &SiteId {
        &self.site
    }

    pub fn flows(&self) -> &[&'a SynchronousFlowHistory] {
        &self.flows
    }

    /// Minimal stamp among all slices of the group stamped at or after `t`.
    pub fn first_occurrence(&self, t: Tick) -> Result<Tick, OccurrenceError> {
        self.flows
            .iter()
            .filter_map(|f| first_slice(f, t))
            .map(|s| s.time_stamp)
            .min()
            .ok_or(OccurrenceError::NoQualifyingSlice(t))
    }

    /// Maximal stamp among the first slices at or after `t` of every flow.
    pub fn last_occurrence(&self, t: Tick) -> Result<Tick, OccurrenceError> {
        let mut firsts = Vec::with_capacity(self.flows.len());
        for flow in &self.flows {
            let slice = first_slice(flow, t).ok_or_else(|| {
                OccurrenceError::FlowWithoutQualifyingSlice {
                    flow: flow.label(),
                    t,
                }
            })?;
            firsts.push(slice);
        }
        maximal_time_stamp(firsts)
    }
}

pub fn first_occurrence(group: &FlowGroup<'_>, t: Tick) -> Result<Tick, OccurrenceError> {
    group.first_occurrence(t)
}

pub fn last_occurrence(group: &FlowGroup<'_>, t: Tick) -> Result<Tick, OccurrenceError> {
    group.last_occurrence(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Constraint, FlowDescriptor, FlowId};

    fn site(s: &str) -> SiteId {
        SiteId::new(s).unwrap()
    }

    fn history(id: &str, stamps: &[Tick]) -> SynchronousFlowHistory {
        let flow = FlowId::new(id).unwrap();
        let desc = FlowDescriptor::new(flow.clone(), "src", site("L1"), Constraint::Hard);
        SynchronousFlowHistory::from_slices(
            site("L1"),
            vec![desc],
            stamps
                .iter()
                .map(|&t| SynchronousSlice::single(t, site("L1"), flow.clone(), vec![1])),
        )
        .unwrap()
    }

    fn slice_at(t: Tick, s: &str) -> SynchronousSlice {
        SynchronousSlice::single(t, site(s), FlowId::new("A").unwrap(), vec![])
    }

    #[test]
    fn minimal_and_maximal() {
        let set = [slice_at(5, "L1"), slice_at(3, "L1"), slice_at(9, "L1")];
        assert_eq!(minimal_time_stamp(&set), Ok(3));
        assert_eq!(maximal_time_stamp(&set), Ok(9));
        let ties = [slice_at(4, "L1"), slice_at(4, "L1"), slice_at(7, "L1")];
        assert_eq!(minimal_time_stamp(&ties), Ok(4));
        assert_eq!(minimal_time_stamp(&[]), Err(OccurrenceError::EmptySet));
        assert!(matches!(
            maximal_time_stamp(&[slice_at(1, "L1"), slice_at(2, "L2")]),
            Err(OccurrenceError::MixedSites(_, _))
        ));
    }

    #[test]
    fn first_slice_examples() {
        let h = history("A", &[0, 10, 20]);
        assert_eq!(first_slice(&h, 11).map(|s| s.time_stamp), Some(20));
        assert_eq!(first_slice(&h, 0).map(|s| s.time_stamp), Some(0));
        assert_eq!(first_slice(&h, 10).map(|s| s.time_stamp), Some(10));
        assert_eq!(first_slice(&history("A", &[0, 10]), 25), None);
    }

    #[test]
    fn first_occurrence_examples() {
        let a = history("A", &[10, 20, 30]);
        let b = history("B", &[12, 22]);
        let g = FlowGroup::new(vec![&a, &b]).unwrap();
        assert_eq!(g.first_occurrence(11), Ok(12));

        let a = history("A", &[10]);
        let b = history("B", &[10]);
        assert_eq!(
            FlowGroup::new(vec![&a, &b]).unwrap().first_occurrence(10),
            Ok(10)
        );

        let a = history("A", &[5]);
        assert_eq!(
            FlowGroup::new(vec![&a]).unwrap().first_occurrence(6),
            Err(OccurrenceError::NoQualifyingSlice(6))
        );
    }

    #[test]
    fn last_occurrence_examples() {
        let a = history("A", &[10, 20, 30]);
        let b = history("B", &[12, 22]);
        assert_eq!(
            FlowGroup::new(vec![&a, &b]).unwrap().last_occurrence(11),
            Ok(20)
        );

        let a = history("A", &[10, 20]);
        let g = FlowGroup::new(vec![&a]).unwrap();
        assert_eq!(g.last_occurrence(5), Ok(10));
        assert_eq!(g.first_occurrence(5), Ok(10));

        let a = history("A", &[10]);
        let b = history("B", &[3]);
        assert_eq!(
            FlowGroup::new(vec![&a, &b]).unwrap().last_occurrence(5),
            Err(OccurrenceError::FlowWithoutQualifyingSlice {
                flow: "B".into(),
                t: 5
            })
        );
    }

    #[test]
    fn group_rejects_mixed_sites_and_emptiness() {
        assert!(matches!(
            FlowGroup::new(vec![]),
            Err(OccurrenceError::EmptyGroup)
        ));
        let a = history("A", &[0]);
        let flow = FlowId::new("B").unwrap();
        let remote = SynchronousFlowHistory::primitive(FlowDescriptor::new(
            flow,
            "src",
            site("L2"),
            Constraint::Soft,
        ));
        assert!(matches!(
            FlowGroup::new(vec![&a, &remote]),
            Err(OccurrenceError::MixedSites(_, _))
        ));
    }
}
