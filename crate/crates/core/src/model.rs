//! Flow model: located sources, information units, synchronous slices and
//! synchronous flow histories.
//!
//! Time stamps are integer ticks of a site-local physical clock. Two stamps
//! produced on different sites are never compared directly; only intervals
//! between stamps of the same site carry meaning.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// A tick of a site-local physical clock.
pub type Tick = i64;

/// Sequence number assigned by a logical clock. The first unit is 1.
pub type SequenceNumber = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("identifier must not be empty")]
    EmptyIdentifier,
    #[error("slice at {0} is not part of the history")]
    SliceNotInHistory(Tick),
    #[error("cannot compare stamps of site {0} with stamps of site {1}")]
    CrossSiteComparison(SiteId, SiteId),
    #[error("need at least two slices, history has {0}")]
    InsufficientHistory(usize),
    #[error("theta must be positive")]
    NonPositiveTheta,
    #[error("invalid slice: {0:?}")]
    InvalidSlice(Vec<SliceViolation>),
    #[error("slice stamp {stamp} does not follow last stamp {last}")]
    NonIncreasingStamp { last: Tick, stamp: Tick },
    #[error("slice carries flow {0} outside the history's flow set")]
    ForeignFlow(FlowId),
    #[error("slice site {found} differs from history site {expected}")]
    SiteMismatch { expected: SiteId, found: SiteId },
    #[error("flow {flow} is located on {flow_site}, history is on {site}")]
    FlowSiteMismatch {
        flow: FlowId,
        flow_site: SiteId,
        site: SiteId,
    },
    #[error("flow set must not be empty")]
    EmptyFlowSet,
}

/// Identifier of a capture or creation site.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteId(String);

impl SiteId {
    pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        if id.is_empty() {
            return Err(ModelError::EmptyIdentifier);
        }
        Ok(SiteId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Identifier of a data flow, unique within an application.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowId(String);

impl FlowId {
    pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        if id.is_empty() {
            return Err(ModelError::EmptyIdentifier);
        }
        Ok(FlowId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Temporal constraint declared for a flow at design time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    Hard,
    Soft,
}

/// A data flow produced by one located source `(source_id, site)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowDescriptor {
    pub flow_id: FlowId,
    pub source_id: String,
    pub site: SiteId,
    pub constraint: Constraint,
    pub coding_format: String,
    /// Regular production period in ticks, `None` for irregular flows.
    pub nominal_period: Option<u64>,
}

impl FlowDescriptor {
    pub fn new(
        flow_id: FlowId,
        source_id: impl Into<String>,
        site: SiteId,
        constraint: Constraint,
    ) -> Self {
        FlowDescriptor {
            flow_id,
            source_id: source_id.into(),
            site,
            constraint,
            coding_format: String::from("opaque"),
            nominal_period: None,
        }
    }

    pub fn with_format(mut self, format: impl Into<String>) -> Self {
        self.coding_format = format.into();
        self
    }

    pub fn with_period(mut self, period: u64) -> Self {
        self.nominal_period = Some(period);
        self
    }

    /// The located source `(S, L)` producing this flow.
    pub fn located_source(&self) -> (&str, &SiteId) {
        (&self.source_id, &self.site)
    }

    pub fn is_hard(&self) -> bool {
        self.constraint == Constraint::Hard
    }
}

/// Opaque sample bytes. The coding format is the one of the owning flow.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sample {
    pub payload: Vec<u8>,
}

impl Sample {
    pub fn new(payload: impl Into<Vec<u8>>) -> Self {
        Sample {
            payload: payload.into(),
        }
    }

    /// Coding format, inherited from the flow that carries the sample.
    pub fn format<'a>(&self, flow: &'a FlowDescriptor) -> &'a str {
        &flow.coding_format
    }
}

/// A finite batch of samples of one flow together with its sequence number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InformationUnit {
    pub flow_id: FlowId,
    pub sequence_number: SequenceNumber,
    pub samples: Vec<Sample>,
}

impl InformationUnit {
    pub fn new(flow_id: FlowId, sequence_number: SequenceNumber, samples: Vec<Sample>) -> Self {
        InformationUnit {
            flow_id,
            sequence_number,
            samples,
        }
    }

    /// Convenience constructor for a unit holding a single sample.
    pub fn single(
        flow_id: FlowId,
        sequence_number: SequenceNumber,
        payload: impl Into<Vec<u8>>,
    ) -> Self {
        InformationUnit::new(flow_id, sequence_number, vec![Sample::new(payload)])
    }
}

/// A time stamp plus the information units of one or more flows of one site.
///
/// Fields are public so that slices received from the outside can be
/// inspected with [`validate_slice`] before they are trusted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynchronousSlice {
    pub time_stamp: Tick,
    pub site: SiteId,
    pub units: BTreeMap<FlowId, Vec<InformationUnit>>,
}

impl SynchronousSlice {
    /// Builds a slice and checks it.
    pub fn new(
        time_stamp: Tick,
        site: SiteId,
        units: BTreeMap<FlowId, Vec<InformationUnit>>,
    ) -> Result<Self, ModelError> {
        let slice = SynchronousSlice {
            time_stamp,
            site,
            units,
        };
        validate_slice(&slice).map_err(ModelError::InvalidSlice)?;
        Ok(slice)
    }

    /// A slice holding one unit of one flow.
    pub fn single(
        time_stamp: Tick,
        site: SiteId,
        flow_id: FlowId,
        payload: impl Into<Vec<u8>>,
    ) -> Self {
        let unit = InformationUnit::single(flow_id.clone(), 1, payload);
        SynchronousSlice {
            time_stamp,
            site,
            units: BTreeMap::from([(flow_id, vec![unit])]),
        }
    }

    pub fn flow_ids(&self) -> impl Iterator<Item = &FlowId> {
        self.units.keys()
    }

    pub fn unit_count(&self) -> usize {
        self.units.values().map(Vec::len).sum()
    }

    pub fn units_of(&self, flow: &FlowId) -> &[InformationUnit] {
        self.units.get(flow).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// One reason a slice is not well formed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SliceViolation {
    /// No flow carries any unit.
    Empty,
    /// A flow key maps to an empty unit list.
    EmptyFlow(FlowId),
    /// A sequence number is outside `1..=|A_f|`.
    SequenceGap {
        flow: FlowId,
        missing: Vec<SequenceNumber>,
    },
    DuplicateSequence {
        flow: FlowId,
        sequence_number: SequenceNumber,
    },
    /// Unit stored under another flow's key.
    MisfiledUnit { key: FlowId, unit_flow: FlowId },
    /// Unit without any sample.
    EmptyUnit {
        flow: FlowId,
        sequence_number: SequenceNumber,
    },
    SiteMismatch {
        flow: FlowId,
        flow_site: SiteId,
        slice_site: SiteId,
    },
}

impl fmt::Display for SliceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SliceViolation::Empty => write!(f, "slice carries no information unit"),
            SliceViolation::EmptyFlow(flow) => write!(f, "flow {flow} has an empty unit list"),
            SliceViolation::SequenceGap { flow, missing } => {
                write!(f, "gap in sequence numbers of {flow}: missing {missing:?}")
            }
            SliceViolation::DuplicateSequence {
                flow,
                sequence_number,
            } => write!(f, "duplicate sequence number {sequence_number} in {flow}"),
            SliceViolation::MisfiledUnit { key, unit_flow } => {
                write!(f, "unit of {unit_flow} stored under {key}")
            }
            SliceViolation::EmptyUnit {
                flow,
                sequence_number,
            } => write!(f, "unit {sequence_number} of {flow} has no sample"),
            SliceViolation::SiteMismatch {
                flow,
                flow_site,
                slice_site,
            } => write!(
                f,
                "flow {flow} is located on {flow_site}, slice on {slice_site}"
            ),
        }
    }
}

/// Checks the structural invariants of a slice.
///
/// For every flow present, sequence numbers must be exactly `1..=n` where `n`
/// is the number of units of that flow in the slice.
pub fn validate_slice(slice: &SynchronousSlice) -> Result<(), Vec<SliceViolation>> {
    let mut violations = Vec::new();
    if slice.units.values().all(Vec::is_empty) {
        violations.push(SliceViolation::Empty);
    }
    for (flow, units) in &slice.units {
        if units.is_empty() {
            if !slice.units.values().all(Vec::is_empty) {
                violations.push(SliceViolation::EmptyFlow(flow.clone()));
            }
            continue;
        }
        let bound = units.len() as u64;
        let mut seen = BTreeSet::new();
        for unit in units {
            if &unit.flow_id != flow {
                violations.push(SliceViolation::MisfiledUnit {
                    key: flow.clone(),
                    unit_flow: unit.flow_id.clone(),
                });
            }
            if unit.samples.is_empty() {
                violations.push(SliceViolation::EmptyUnit {
                    flow: flow.clone(),
                    sequence_number: unit.sequence_number,
                });
            }
            if !seen.insert(unit.sequence_number) {
                violations.push(SliceViolation::DuplicateSequence {
                    flow: flow.clone(),
                    sequence_number: unit.sequence_number,
                });
            }
        }
        let missing: Vec<SequenceNumber> = (1..=bound)
            .filter_map(|n| SequenceNumber::try_from(n).ok())
            .filter(|n| !seen.contains(n))
            .collect();
        if !missing.is_empty() {
            violations.push(SliceViolation::SequenceGap {
                flow: flow.clone(),
                missing,
            });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// [`validate_slice`] plus the check that every flow is located on the
/// slice's site. Flows missing from `flows` are not site-checked.
pub fn validate_slice_with(
    slice: &SynchronousSlice,
    flows: &[FlowDescriptor],
) -> Result<(), Vec<SliceViolation>> {
    let mut violations = validate_slice(slice).err().unwrap_or_default();
    for flow in slice.units.keys() {
        if let Some(desc) = flows.iter().find(|d| &d.flow_id == flow) {
            if desc.site != slice.site {
                violations.push(SliceViolation::SiteMismatch {
                    flow: flow.clone(),
                    flow_site: desc.site.clone(),
                    slice_site: slice.site.clone(),
                });
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Position of an information unit inside a synchronous flow: the stamp of
/// its slice and its sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnitPosition {
    pub time_stamp: Tick,
    pub sequence_number: SequenceNumber,
}

impl UnitPosition {
    pub fn new(time_stamp: Tick, sequence_number: SequenceNumber) -> Self {
        UnitPosition {
            time_stamp,
            sequence_number,
        }
    }
}

/// Order of two units of the same flow: by slice stamp, then by sequence number.
pub fn compare_units(a: UnitPosition, b: UnitPosition) -> Ordering {
    if a.time_stamp < b.time_stamp {
        Ordering::Less
    } else if a.time_stamp > b.time_stamp {
        Ordering::Greater
    } else if a.sequence_number < b.sequence_number {
        Ordering::Less
    } else if a.sequence_number > b.sequence_number {
        Ordering::Greater
    } else {
        Ordering::Equal
    }
}

impl PartialOrd for UnitPosition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for UnitPosition {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_units(*self, *other)
    }
}

/// Slices of one synchronous flow are ordered by time stamp only.
pub fn compare_slices(a: &SynchronousSlice, b: &SynchronousSlice) -> Ordering {
    a.time_stamp.cmp(&b.time_stamp)
}

/// Absolute distance between the stamps of two slices of the same site.
pub fn time_interval(a: &SynchronousSlice, b: &SynchronousSlice) -> Result<u64, ModelError> {
    if a.site != b.site {
        return Err(ModelError::CrossSiteComparison(
            a.site.clone(),
            b.site.clone(),
        ));
    }
    Ok(b.time_stamp.abs_diff(a.time_stamp))
}

/// An ordered sequence of slices over a fixed flow set.
///
/// Slices may carry any subset of the flow set (a composed flow can contain
/// slices where some member flow has no unit), but never a flow outside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynchronousFlowHistory {
    flow_set: Vec<FlowDescriptor>,
    site: SiteId,
    slices: Vec<SynchronousSlice>,
}

impl SynchronousFlowHistory {
    pub fn new(site: SiteId, flow_set: Vec<FlowDescriptor>) -> Result<Self, ModelError> {
        if flow_set.is_empty() {
            return Err(ModelError::EmptyFlowSet);
        }
        for flow in &flow_set {
            if flow.site != site {
                return Err(ModelError::FlowSiteMismatch {
                    flow: flow.flow_id.clone(),
                    flow_site: flow.site.clone(),
                    site,
                });
            }
        }
        let mut flow_set = flow_set;
        flow_set.sort_by(|a, b| a.flow_id.cmp(&b.flow_id));
        flow_set.dedup_by(|a, b| a.flow_id == b.flow_id);
        Ok(SynchronousFlowHistory {
            flow_set,
            site,
            slices: Vec::new(),
        })
    }

    /// History of a single flow, located on that flow's site.
    pub fn primitive(flow: FlowDescriptor) -> Self {
        SynchronousFlowHistory {
            site: flow.site.clone(),
            flow_set: vec![flow],
            slices: Vec::new(),
        }
    }

    pub fn from_slices(
        site: SiteId,
        flow_set: Vec<FlowDescriptor>,
        slices: impl IntoIterator<Item = SynchronousSlice>,
    ) -> Result<Self, ModelError> {
        let mut history = SynchronousFlowHistory::new(site, flow_set)?;
        for slice in slices {
            history.push(slice)?;
        }
        Ok(history)
    }

    /// Appends a slice, enforcing stamp order, site and flow set membership.
    pub fn push(&mut self, slice: SynchronousSlice) -> Result<(), ModelError> {
        if slice.site != self.site {
            return Err(ModelError::SiteMismatch {
                expected: self.site.clone(),
                found: slice.site.clone(),
            });
        }
        validate_slice_with(&slice, &self.flow_set).map_err(ModelError::InvalidSlice)?;
        if let Some(flow) = slice.units.keys().find(|f| !self.contains_flow(f)) {
            return Err(ModelError::ForeignFlow(flow.clone()));
        }
        if let Some(last) = self.slices.last() {
            if slice.time_stamp <= last.time_stamp {
                return Err(ModelError::NonIncreasingStamp {
                    last: last.time_stamp,
                    stamp: slice.time_stamp,
                });
            }
        }
        self.slices.push(slice);
        Ok(())
    }

    /// Removes and returns the first `count` slices.
    pub fn take_front(&mut self, count: usize) -> Vec<SynchronousSlice> {
        self.slices.drain(..count.min(self.slices.len())).collect()
    }

    /// Removes the slice stamped `stamp`, if any.
    pub fn remove_stamp(&mut self, stamp: Tick) -> Option<SynchronousSlice> {
        let idx = self.index_of_stamp(stamp)?;
        Some(self.slices.remove(idx))
    }

    pub fn flow_set(&self) -> &[FlowDescriptor] {
        &self.flow_set
    }

    pub fn contains_flow(&self, flow: &FlowId) -> bool {
        self.flow_set.iter().any(|d| &d.flow_id == flow)
    }

    pub fn site(&self) -> &SiteId {
        &self.site
    }

    pub fn slices(&self) -> &[SynchronousSlice] {
        &self.slices
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn first(&self) -> Option<&SynchronousSlice> {
        self.slices.first()
    }

    pub fn last(&self) -> Option<&SynchronousSlice> {
        self.slices.last()
    }

    pub fn is_primitive(&self) -> bool {
        self.flow_set.len() == 1
    }

    pub fn is_composed(&self) -> bool {
        self.flow_set.len() > 1
    }

    /// Comma-joined flow identifiers, used to name a history in reports.
    pub fn label(&self) -> String {
        self.flow_set
            .iter()
            .map(|d| d.flow_id.as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Index of the slice with the given stamp (stamps are unique).
    pub fn index_of_stamp(&self, stamp: Tick) -> Option<usize> {
        self.slices
            .binary_search_by(|s| s.time_stamp.cmp(&stamp))
            .ok()
    }

    fn position(&self, slice: &SynchronousSlice) -> Result<usize, ModelError> {
        self.index_of_stamp(slice.time_stamp)
            .filter(|&i| &self.slices[i] == slice)
            .ok_or(ModelError::SliceNotInHistory(slice.time_stamp))
    }

    /// Immediate predecessor of `slice`, `None` for the first slice.
    pub fn prev(&self, slice: &SynchronousSlice) -> Result<Option<&SynchronousSlice>, ModelError> {
        let idx = self.position(slice)?;
        Ok(idx.checked_sub(1).map(|i| &self.slices[i]))
    }

    /// Immediate successor of `slice`, `None` for the latest slice.
    pub fn next(&self, slice: &SynchronousSlice) -> Result<Option<&SynchronousSlice>, ModelError> {
        let idx = self.position(slice)?;
        Ok(self.slices.get(idx + 1))
    }

    /// Classifies a complete history against `theta`: hard when every gap
    /// between consecutive slices is at most `theta`.
    pub fn check_constraint(&self, theta: u64) -> Result<Constraint, ModelError> {
        if theta == 0 {
            return Err(ModelError::NonPositiveTheta);
        }
        if self.slices.len() < 2 {
            return Err(ModelError::InsufficientHistory(self.slices.len()));
        }
        let hard = self
            .slices
            .windows(2)
            .all(|w| w[1].time_stamp.abs_diff(w[0].time_stamp) <= theta);
        Ok(if hard {
            Constraint::Hard
        } else {
            Constraint::Soft
        })
    }
}
