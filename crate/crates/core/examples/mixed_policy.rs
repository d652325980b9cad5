// One hard and one soft flow: `alpha` timers and slices kept for later.

use korrontea::fusion::{EngineEvent, FusionEngine, PolicyParams, StepOutcome, TimerToken};
use korrontea::{Constraint, FlowDescriptor, FlowId, SiteId, SynchronousSlice};

fn show(at: i64, out: &StepOutcome) {
    for e in &out.emitted {
        println!(
            "t={at:>2} emit ts={} TMAX={:?} used {:?} too early {:?}",
            e.record.output_ts, e.record.t_max, e.record.used, e.record.too_early
        );
    }
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let site = SiteId::new("L1")?;
    let h = FlowId::new("H")?;
    let s = FlowId::new("s")?;
    let group = vec![
        FlowDescriptor::new(h.clone(), "video", site.clone(), Constraint::Hard),
        FlowDescriptor::new(s.clone(), "subtitles", site.clone(), Constraint::Soft),
    ];
    let mut engine = FusionEngine::new(PolicyParams::new(10, 5)?, group)?;
    let mut timers: Vec<(i64, TimerToken)> = Vec::new();

    let mut arrive = |engine: &mut FusionEngine,
                      flow: &FlowId,
                      stamp: i64,
                      at: i64|
     -> Result<(), Box<dyn std::error::Error>> {
        let slice = SynchronousSlice::single(stamp, site.clone(), flow.clone(), vec![stamp as u8]);
        let out = engine.step(EngineEvent::SliceArrived {
            flow: flow.clone(),
            slice,
            arrival: at,
        })?;
        for t in &out.timers {
            println!(
                "t={at:>2} {flow}@{stamp} asks for a timer in {} ticks",
                t.delay
            );
            timers.push((at + t.delay as i64, t.token));
        }
        show(at, &out);
        Ok(())
    };
    arrive(&mut engine, &h, 0, 0)?;
    arrive(&mut engine, &s, 2, 2)?;
    arrive(&mut engine, &h, 10, 10)?;
    println!("autorisation before timers: {}", engine.autorisation());

    for (at, token) in timers {
        let out = engine.step(EngineEvent::TimerFired { token, at })?;
        show(at, &out);
    }
    for flow in [&h, &s] {
        let out = engine.step(EngineEvent::FlowEnded {
            flow: flow.clone(),
            at: 20,
        })?;
        show(20, &out);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
