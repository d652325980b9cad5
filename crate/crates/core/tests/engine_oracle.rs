use std::collections::BTreeMap;

use proptest::prelude::*;

use korrontea::fusion::{oracle_compose, oracle_plan, select_policy, Policy};
use korrontea::sim::{
    emit_trace, generate_scenario, parse_trace, run_scenario, verify_scenario, FlowSpec,
    ScenarioConfig,
};
use korrontea::{FlowId, Tick};

fn scenario_strategy(delays_within_alpha: bool) -> impl Strategy<Value = ScenarioConfig> {
    (
        1u64..20,
        0u64..15,
        1u32..40,
        any::<u64>(),
        0usize..4,
        0usize..4,
    )
        .prop_filter("needs a flow", |(_, _, _, _, h, s)| h + s > 0)
        .prop_flat_map(move |(theta, alpha, rounds, seed, nh, ns)| {
            let delay_cap = if delays_within_alpha { alpha } else { 20 };
            let hard = proptest::collection::vec((1..=theta, 0..=delay_cap), nh);
            let soft = proptest::collection::vec((1u64..30, 0..=delay_cap), ns);
            (Just((theta, alpha, rounds, seed)), hard, soft)
        })
        .prop_map(|((theta, alpha, rounds, seed), hard, soft)| {
            let mut cfg = ScenarioConfig::new(theta, alpha, rounds, seed);
            for (i, (p, d)) in hard.into_iter().enumerate() {
                cfg = cfg.with_hard(FlowSpec::new(i as u32, p, d));
            }
            for (i, (p, d)) in soft.into_iter().enumerate() {
                cfg = cfg.with_soft(FlowSpec::new(i as u32, p, d));
            }
            cfg
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn online_equals_offline_when_delays_fit_alpha(cfg in scenario_strategy(true)) {
        let sc = generate_scenario(&cfg).unwrap();
        let params = cfg.params().unwrap();
        let policy = select_policy(&sc.descriptors()).unwrap();
        let out = run_scenario(&sc, params).unwrap();
        let oracle = oracle_compose(&sc.histories(), params, policy).unwrap();
        prop_assert_eq!(&out.composed, &oracle);
        let plan = oracle_plan(&sc.histories(), params, policy).unwrap();
        prop_assert_eq!(out.records.len(), plan.len());
        for (r, o) in out.records.iter().zip(&plan) {
            prop_assert_eq!(r.output_ts, o.output_ts);
            prop_assert_eq!(r.t_max, o.t_max);
            prop_assert_eq!(&r.used, &o.used);
        }
        prop_assert!(out.side_channel.is_empty());
    }

    #[test]
    fn every_source_slice_is_accounted_for(cfg in scenario_strategy(false)) {
        let sc = generate_scenario(&cfg).unwrap();
        let out = run_scenario(&sc, cfg.params().unwrap()).unwrap();
        let mut seen: BTreeMap<(FlowId, Tick), usize> = BTreeMap::new();
        for r in &out.records {
            for (f, stamps) in &r.used {
                for &t in stamps {
                    *seen.entry((f.clone(), t)).or_default() += 1;
                }
            }
        }
        for l in &out.side_channel {
            *seen.entry((l.flow.clone(), l.stamp)).or_default() += 1;
        }
        let total: usize = sc.flows.iter().map(|f| f.history.len()).sum();
        prop_assert_eq!(seen.len(), total);
        prop_assert!(seen.values().all(|&n| n == 1));
    }

    #[test]
    fn traces_round_trip_and_verify_structurally(cfg in scenario_strategy(false)) {
        let sc = generate_scenario(&cfg).unwrap();
        let params = cfg.params().unwrap();
        let out = run_scenario(&sc, params).unwrap();
        let trace = out.trace();
        let text = emit_trace(&trace);
        prop_assert_eq!(&parse_trace(&text).unwrap(), &trace);
        let report = verify_scenario(&trace, &sc, params);
        prop_assert!(report.violations.is_empty(), "{}", report);
        prop_assert!(report.conservation_failures.is_empty(), "{}", report);
    }

    #[test]
    fn mixed_rounds_always_carry_a_hard_unit(cfg in scenario_strategy(false)) {
        let sc = generate_scenario(&cfg).unwrap();
        let policy = select_policy(&sc.descriptors()).unwrap();
        prop_assume!(policy == Policy::Mixed);
        let out = run_scenario(&sc, cfg.params().unwrap()).unwrap();
        let hard: Vec<&FlowId> = sc.flows.iter().filter(|f| f.descriptor.is_hard()).map(|f| f.flow_id()).collect();
        for r in out.records.iter().filter(|r| r.t_max.is_some()) {
            prop_assert!(r.used.iter().any(|(f, s)| hard.contains(&f) && !s.is_empty()));
        }
    }
}

#[test]
fn hard_output_does_not_depend_on_delays() {
    let base = ScenarioConfig::new(13, 0, 300, 21)
        .with_hard(FlowSpec::new(0, 10, 0))
        .with_hard(FlowSpec::new(1, 7, 0))
        .with_hard(FlowSpec::new(2, 13, 0));
    let mut delayed = base.clone();
    for f in &mut delayed.hard_flows {
        f.max_delay = 40;
    }
    let a = run_scenario(&generate_scenario(&base).unwrap(), base.params().unwrap()).unwrap();
    let b = run_scenario(
        &generate_scenario(&delayed).unwrap(),
        delayed.params().unwrap(),
    )
    .unwrap();
    assert_eq!(a.composed, b.composed);
}
