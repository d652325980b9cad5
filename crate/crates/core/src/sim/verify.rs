//! Checking a trace against the scenario it claims to come from.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::fusion::{
    compose_result_slice, oracle_plan, select_policy, OracleRound, Policy, PolicyParams,
};
use crate::model::{
    validate_slice, FlowId, SliceViolation, SynchronousFlowHistory, SynchronousSlice, Tick,
};
use crate::occurrence::FlowGroup;

use super::scenario::{generate_scenario, Scenario, ScenarioConfig};
use super::trace::{Trace, TraceRecord};
use super::SimError;

/// Findings of [`verify`]. Empty lists mean the trace is consistent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub records: usize,
    pub oracle_rounds: usize,
    /// Records with no identical oracle round, and oracle rounds with no
    /// identical record.
    pub mismatches: Vec<String>,
    pub violations: Vec<String>,
    pub conservation_failures: Vec<String>,
    /// Late slices that were still emitted plus slices set aside.
    pub late_incidents: usize,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
            && self.violations.is_empty()
            && self.conservation_failures.is_empty()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records: {}", self.records)?;
        writeln!(f, "oracle rounds: {}", self.oracle_rounds)?;
        writeln!(f, "mismatches: {}", self.mismatches.len())?;
        writeln!(f, "violations: {}", self.violations.len())?;
        writeln!(
            f,
            "conservation failures: {}",
            self.conservation_failures.len()
        )?;
        writeln!(f, "late incidents: {}", self.late_incidents)?;
        for m in self
            .mismatches
            .iter()
            .chain(&self.violations)
            .chain(&self.conservation_failures)
        {
            writeln!(f, "  {m}")?;
        }
        Ok(())
    }
}

/// Regenerates the scenario of `cfg` and checks `trace` against it.
pub fn verify(trace: &Trace, cfg: &ScenarioConfig) -> Result<VerifyReport, SimError> {
    let scenario = generate_scenario(cfg)?;
    Ok(verify_scenario(trace, &scenario, cfg.params()?))
}

type RoundKey = (Tick, Option<Tick>, Vec<(FlowId, Vec<Tick>)>);

fn key_of_record(r: &TraceRecord) -> RoundKey {
    (
        r.output_ts,
        r.t_max,
        r.used
            .iter()
            .map(|u| (u.flow.clone(), u.stamps.clone()))
            .collect(),
    )
}

fn key_of_round(r: &OracleRound) -> RoundKey {
    (r.output_ts, r.t_max, r.used.clone())
}

fn describe(k: &RoundKey) -> String {
    let mut s = format!("ts={}", k.0);
    if let Some(t) = k.1 {
        s.push_str(&format!(" TMAX={t}"));
    }
    for (f, stamps) in &k.2 {
        s.push_str(&format!(" {f}{stamps:?}"));
    }
    s
}

pub fn verify_scenario(trace: &Trace, scenario: &Scenario, params: PolicyParams) -> VerifyReport {
    let histories = scenario.histories();
    let policy = select_policy(&scenario.descriptors()).expect("scenario has flows");
    let mut report = VerifyReport {
        records: trace.records.len(),
        late_incidents: trace.records.iter().map(|r| r.late.len()).sum::<usize>()
            + trace.side_channel.len(),
        ..Default::default()
    };

    // multiset difference against the oracle
    match oracle_plan(&histories, params, policy) {
        Ok(plan) => {
            report.oracle_rounds = plan.len();
            let mut pending: BTreeMap<RoundKey, usize> = BTreeMap::new();
            for r in &plan {
                *pending.entry(key_of_round(r)).or_default() += 1;
            }
            for r in &trace.records {
                let k = key_of_record(r);
                match pending.get_mut(&k) {
                    Some(n) if *n > 0 => *n -= 1,
                    _ => report.mismatches.push(format!(
                        "slice {} not in oracle: {}",
                        r.index,
                        describe(&k)
                    )),
                }
            }
            for (k, n) in pending {
                for _ in 0..n {
                    report
                        .mismatches
                        .push(format!("oracle slice missing: {}", describe(&k)));
                }
            }
        }
        Err(e) => report.violations.push(format!("oracle failed: {e}")),
    }

    let by_flow: BTreeMap<&FlowId, &SynchronousFlowHistory> = scenario
        .flows
        .iter()
        .map(|f| (f.flow_id(), &f.history))
        .collect();
    let hard: BTreeSet<&FlowId> = scenario
        .flows
        .iter()
        .filter(|f| f.descriptor.is_hard())
        .map(|f| f.flow_id())
        .collect();
    let theta = params.theta();

    for (pos, r) in trace.records.iter().enumerate() {
        let tag = format!("slice {}", r.index);
        if r.index != pos + 1 {
            report
                .violations
                .push(format!("{tag}: expected index {}", pos + 1));
        }
        check_record_shape(r, policy, theta, &tag, &mut report.violations);
        check_reconstruction(r, &by_flow, &tag, &mut report.violations);
        check_first_occurrence(
            r,
            policy,
            &hard,
            &by_flow,
            scenario,
            &tag,
            &mut report.violations,
        );
    }

    // every source stamp exactly once across records and the side channel
    let mut seen: BTreeMap<(&FlowId, Tick), usize> = BTreeMap::new();
    for r in &trace.records {
        for u in &r.used {
            for &t in &u.stamps {
                *seen.entry((&u.flow, t)).or_default() += 1;
            }
        }
    }
    for l in &trace.side_channel {
        *seen.entry((&l.flow, l.stamp)).or_default() += 1;
    }
    for f in &scenario.flows {
        for s in f.history.slices() {
            match seen.remove(&(f.flow_id(), s.time_stamp)).unwrap_or(0) {
                1 => {}
                n => report.conservation_failures.push(format!(
                    "{}@{} appears {n} times",
                    f.flow_id(),
                    s.time_stamp
                )),
            }
        }
    }
    for ((flow, t), _) in seen {
        report
            .conservation_failures
            .push(format!("{flow}@{t} is not a source slice"));
    }
    report
}

fn check_record_shape(
    r: &TraceRecord,
    policy: Policy,
    theta: u64,
    tag: &str,
    out: &mut Vec<String>,
) {
    match (policy, r.t_max) {
        (Policy::Soft, Some(_)) => out.push(format!("{tag}: TMAX under the soft policy")),
        (Policy::Hard, None) => out.push(format!("{tag}: missing TMAX under the hard policy")),
        _ => {}
    }
    let end = match r.t_max {
        Some(t) => t,
        None => r.output_ts.saturating_add_unsigned(theta),
    };
    for u in &r.used {
        if let Some(t) = u.stamps.iter().find(|&&t| t > end) {
            out.push(format!(
                "{tag}: {}@{t} is past the window end {end}",
                u.flow
            ));
        }
        if u.stamps.windows(2).any(|w| w[0] >= w[1]) {
            out.push(format!("{tag}: stamps of {} out of order", u.flow));
        }
    }
    for (flow, stamps) in &r.too_early {
        if let Some(t) = stamps.iter().find(|&&t| t <= end) {
            out.push(format!(
                "{tag}: {flow}@{t} marked too early but inside the window"
            ));
        }
    }
}

fn check_reconstruction(
    r: &TraceRecord,
    by_flow: &BTreeMap<&FlowId, &SynchronousFlowHistory>,
    tag: &str,
    out: &mut Vec<String>,
) {
    let mut consumed: Vec<&SynchronousSlice> = Vec::new();
    for u in &r.used {
        let Some(h) = by_flow.get(&u.flow) else {
            out.push(format!("{tag}: unknown flow {}", u.flow));
            continue;
        };
        if u.count > u.stamps.len() {
            let missing = (u.stamps.len() as u32 + 1..=u.count as u32).collect();
            out.push(format!(
                "{tag}: {}",
                SliceViolation::SequenceGap {
                    flow: u.flow.clone(),
                    missing
                }
            ));
        } else if u.count < u.stamps.len() {
            out.push(format!(
                "{tag}: {} counts {} units for {} stamps",
                u.flow,
                u.count,
                u.stamps.len()
            ));
        }
        for &t in &u.stamps {
            match h.index_of_stamp(t) {
                Some(i) => consumed.push(&h.slices()[i]),
                None => out.push(format!("{tag}: {}@{t} is not a source slice", u.flow)),
            }
        }
    }
    match compose_result_slice(consumed, r.output_ts) {
        Ok(slice) => {
            if let Err(v) = validate_slice(&slice) {
                out.extend(v.into_iter().map(|v| format!("{tag}: {v}")));
            }
        }
        Err(e) => out.push(format!("{tag}: {e}")),
    }
}

fn check_first_occurrence(
    r: &TraceRecord,
    policy: Policy,
    hard: &BTreeSet<&FlowId>,
    by_flow: &BTreeMap<&FlowId, &SynchronousFlowHistory>,
    scenario: &Scenario,
    tag: &str,
    out: &mut Vec<String>,
) {
    // anchors: hard flows of mixed anchored rounds, every flow otherwise
    let anchored_on_hard = policy == Policy::Mixed && r.t_max.is_some();
    let mut listed = Vec::new();
    for u in &r.used {
        if anchored_on_hard && !hard.contains(&u.flow) {
            continue;
        }
        let Some(src) = by_flow.get(&u.flow) else {
            continue;
        };
        let slices = u
            .stamps
            .iter()
            .filter_map(|&t| src.index_of_stamp(t).map(|i| src.slices()[i].clone()));
        match SynchronousFlowHistory::from_slices(
            scenario.site.clone(),
            src.flow_set().to_vec(),
            slices,
        ) {
            Ok(h) => listed.push(h),
            Err(e) => out.push(format!("{tag}: {e}")),
        }
    }
    let Some(start) = listed
        .iter()
        .filter_map(|h| h.first().map(|s| s.time_stamp))
        .min()
    else {
        out.push(format!("{tag}: no anchoring slice"));
        return;
    };
    let fo = FlowGroup::new(listed.iter().collect()).and_then(|g| g.first_occurrence(start));
    match fo {
        Ok(t) if t == r.output_ts => {}
        Ok(t) => out.push(format!(
            "{tag}: first occurrence {t} differs from ts={}",
            r.output_ts
        )),
        Err(e) => out.push(format!("{tag}: {e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::run::run_simulation;
    use crate::sim::scenario::FlowSpec;

    fn hard_cfg() -> ScenarioConfig {
        ScenarioConfig::new(10, 5, 40, 3)
            .with_hard(FlowSpec::new(0, 10, 5))
            .with_hard(FlowSpec::new(1, 7, 5))
    }

    #[test]
    fn clean_hard_run() {
        let cfg = hard_cfg();
        let trace = run_simulation(&cfg).unwrap().trace();
        let report = verify(&trace, &cfg).unwrap();
        assert!(report.is_clean(), "{report}");
        assert_eq!(report.records, report.oracle_rounds);
    }

    #[test]
    fn count_gap_is_reported() {
        let cfg = hard_cfg();
        let mut trace = run_simulation(&cfg).unwrap().trace();
        trace.records[3].used[0].count += 1;
        let report = verify(&trace, &cfg).unwrap();
        assert!(
            report
                .violations
                .iter()
                .any(|v| v.contains("gap in sequence numbers")),
            "{report}"
        );
    }

    #[test]
    fn dropped_slice_breaks_conservation() {
        let cfg = hard_cfg();
        let mut trace = run_simulation(&cfg).unwrap().trace();
        let u = &mut trace.records[0].used[1];
        u.stamps.clear();
        u.count = 0;
        let report = verify(&trace, &cfg).unwrap();
        assert!(!report.conservation_failures.is_empty());
        assert!(!report.mismatches.is_empty());
    }

    #[test]
    fn late_slices_are_counted() {
        let cfg = ScenarioConfig::new(10, 0, 200, 5)
            .with_hard(FlowSpec::new(0, 5, 10))
            .with_soft(FlowSpec::new(0, 6, 10));
        let trace = run_simulation(&cfg).unwrap().trace();
        let report = verify(&trace, &cfg).unwrap();
        assert!(report.late_incidents > 0);
        assert!(!report.mismatches.is_empty());
        assert!(report.conservation_failures.is_empty(), "{report}");
    }
}
