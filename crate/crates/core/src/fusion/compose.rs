use std::collections::BTreeMap;

use crate::model::{
    compare_units, FlowId, InformationUnit, SynchronousFlowHistory, SynchronousSlice, Tick,
    UnitPosition,
};

use super::FusionError;

/// Builds one output slice from the source slices consumed in a round.
///
/// Units of each flow are ordered by (source stamp, source sequence number)
/// and renumbered from 1.
pub fn compose_result_slice<'a, I>(
    consumed: I,
    output_ts: Tick,
) -> Result<SynchronousSlice, FusionError>
where
    I: IntoIterator<Item = &'a SynchronousSlice>,
{
    let mut site = None;
    let mut per_flow: BTreeMap<FlowId, Vec<(UnitPosition, &InformationUnit)>> = BTreeMap::new();
    for slice in consumed {
        match &site {
            None => site = Some(slice.site.clone()),
            Some(s) if s != &slice.site => {
                return Err(FusionError::MixedSites(s.clone(), slice.site.clone()));
            }
            Some(_) => {}
        }
        for (flow, units) in &slice.units {
            let entry = per_flow.entry(flow.clone()).or_default();
            entry.extend(
                units
                    .iter()
                    .map(|u| (UnitPosition::new(slice.time_stamp, u.sequence_number), u)),
            );
        }
    }
    let site = site.ok_or(FusionError::EmptyConsumption)?;
    let mut units = BTreeMap::new();
    for (flow, mut entries) in per_flow {
        if entries.is_empty() {
            continue;
        }
        entries.sort_by(|a, b| compare_units(a.0, b.0));
        let renumbered = entries
            .into_iter()
            .zip(1..)
            .map(|((_, unit), n)| InformationUnit::new(flow.clone(), n, unit.samples.clone()))
            .collect();
        units.insert(flow, renumbered);
    }
    if units.is_empty() {
        return Err(FusionError::EmptyConsumption);
    }
    Ok(SynchronousSlice::new(output_ts, site, units)?)
}

/// Splits a composed flow into one primitive flow per member.
///
/// Each output slice keeps the composed slice's stamp and the member's units
/// with their sequence numbers. Members absent from a composed slice get no
/// slice at that stamp.
pub fn separate(
    history: &SynchronousFlowHistory,
) -> Result<Vec<SynchronousFlowHistory>, FusionError> {
    if !history.is_composed() {
        return Err(FusionError::AlreadyPrimitive);
    }
    let mut out = Vec::with_capacity(history.flow_set().len());
    for desc in history.flow_set() {
        let mut primitive = SynchronousFlowHistory::primitive(desc.clone());
        for slice in history.slices() {
            if let Some(units) = slice.units.get(&desc.flow_id).filter(|u| !u.is_empty()) {
                primitive.push(SynchronousSlice {
                    time_stamp: slice.time_stamp,
                    site: slice.site.clone(),
                    units: BTreeMap::from([(desc.flow_id.clone(), units.clone())]),
                })?;
            }
        }
        out.push(primitive);
    }
    Ok(out)
}
