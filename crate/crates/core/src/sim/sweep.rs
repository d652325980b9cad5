//! Accuracy and latency of one scenario over a range of `alpha`.

use std::fmt::Write as _;

use super::run::run_scenario;
use super::scenario::{generate_scenario, ScenarioConfig};
use super::verify::verify_scenario;
use super::SimError;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: u64,
    pub slices: usize,
    pub mismatches: usize,
    pub late: usize,
    /// Emission tick minus source stamp, over every emitted source slice.
    pub mean_latency: f64,
    pub max_latency: u64,
}

/// Runs the scenario once per `alpha` in `from..=to`. Only `alpha` changes;
/// stamps and delays are identical across rows.
pub fn sweep_alpha(cfg: &ScenarioConfig, from: u64, to: u64) -> Result<Vec<SweepRow>, SimError> {
    if from > to {
        return Err(SimError::InvalidConfig(format!(
            "empty alpha range {from}..={to}"
        )));
    }
    let scenario = generate_scenario(cfg)?;
    let mut rows = Vec::new();
    for alpha in from..=to {
        let mut c = cfg.clone();
        c.alpha = alpha;
        let params = c.params()?;
        let out = run_scenario(&scenario, params)?;
        let trace = out.trace();
        let report = verify_scenario(&trace, &scenario, params);
        let mut total = 0u128;
        let mut n = 0u64;
        let mut max = 0u64;
        for r in &out.records {
            for (_, stamps) in &r.used {
                for &t in stamps {
                    let l = r.emitted_at.abs_diff(t);
                    total += u128::from(l);
                    n += 1;
                    max = max.max(l);
                }
            }
        }
        rows.push(SweepRow {
            alpha,
            slices: out.records.len(),
            mismatches: report.mismatches.len(),
            late: report.late_incidents,
            mean_latency: if n == 0 { 0.0 } else { total as f64 / n as f64 },
            max_latency: max,
        });
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("alpha,slices,mismatches,late,mean_latency,max_latency\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.3},{}",
            r.alpha, r.slices, r.mismatches, r.late, r.mean_latency, r.max_latency
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scenario::FlowSpec;

    #[test]
    fn endpoints() {
        let cfg = ScenarioConfig::new(10, 0, 300, 17)
            .with_hard(FlowSpec::new(0, 5, 10))
            .with_soft(FlowSpec::new(0, 8, 10))
            .with_soft(FlowSpec::new(1, 12, 10));
        let rows = sweep_alpha(&cfg, 0, 10).unwrap();
        assert_eq!(rows.len(), 11);
        assert!(rows[0].mismatches > 0);
        assert_eq!(rows[10].mismatches, 0);
        assert!(rows[10].mean_latency >= rows[0].mean_latency);
        let csv = sweep_csv(&rows);
        assert_eq!(csv.lines().count(), 12);
        assert!(csv.starts_with("alpha,slices,"));
    }

    #[test]
    fn reversed_range_is_rejected() {
        let cfg = ScenarioConfig::new(10, 0, 3, 1).with_hard(FlowSpec::new(0, 5, 0));
        assert!(sweep_alpha(&cfg, 3, 2).is_err());
    }
}
