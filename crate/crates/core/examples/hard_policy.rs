// Feeding the engine by hand with two hard flows.

use korrontea::fusion::{EngineEvent, FusionEngine, PolicyParams};
use korrontea::{Constraint, FlowDescriptor, FlowId, SiteId, SynchronousSlice};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let site = SiteId::new("L1")?;
    let a = FlowId::new("A")?;
    let b = FlowId::new("B")?;
    let group = vec![
        FlowDescriptor::new(a.clone(), "cam", site.clone(), Constraint::Hard),
        FlowDescriptor::new(b.clone(), "mic", site.clone(), Constraint::Hard),
    ];
    let mut engine = FusionEngine::new(PolicyParams::new(10, 0)?, group)?;
    println!("policy: {:?}", engine.policy());

    // (flow, stamp, arrival)
    let arrivals = [
        (&a, 0, 0),
        (&b, 1, 1),
        (&b, 5, 6),
        (&a, 10, 11),
        (&b, 10, 12),
        (&a, 20, 21),
        (&b, 15, 22),
    ];
    for (flow, stamp, arrival) in arrivals {
        let slice =
            SynchronousSlice::single(stamp, site.clone(), flow.clone(), format!("{flow}{stamp}"));
        let out = engine.step(EngineEvent::SliceArrived {
            flow: flow.clone(),
            slice,
            arrival,
        })?;
        for e in out.emitted {
            println!(
                "t={arrival:>2} emit ts={} TMAX={:?} used {:?}",
                e.record.output_ts, e.record.t_max, e.record.used
            );
        }
    }
    for flow in [&a, &b] {
        let out = engine.step(EngineEvent::FlowEnded {
            flow: flow.clone(),
            at: 30,
        })?;
        for e in out.emitted {
            println!(
                "end  emit ts={} TMAX={:?} used {:?}",
                e.record.output_ts, e.record.t_max, e.record.used
            );
        }
    }
    println!(
        "composed flow {} has {} slices",
        engine.output().label(),
        engine.output().len()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
