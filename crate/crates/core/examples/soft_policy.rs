// Soft flows only: windows of width `theta` closed by `alpha + theta` timers.

use korrontea::clock::VirtualTimeline;
use korrontea::fusion::{EngineEvent, FusionEngine, PolicyParams};
use korrontea::{Constraint, FlowDescriptor, FlowId, SiteId, SynchronousSlice};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let site = SiteId::new("L1")?;
    let a = FlowId::new("a")?;
    let b = FlowId::new("b")?;
    let group = vec![
        FlowDescriptor::new(a.clone(), "sensor-a", site.clone(), Constraint::Soft),
        FlowDescriptor::new(b.clone(), "sensor-b", site.clone(), Constraint::Soft),
    ];
    let mut engine = FusionEngine::new(PolicyParams::new(10, 2)?, group)?;
    let mut timeline = VirtualTimeline::new(0);

    let mut arrivals = vec![(&a, 0), (&b, 4), (&a, 9), (&b, 23), (&a, 30)];
    arrivals.reverse();
    while !arrivals.is_empty() || timeline.pending() > 0 {
        let next_arrival = arrivals.last().map(|(_, t)| *t);
        let now = match (next_arrival, timeline.next_deadline()) {
            (Some(x), Some(y)) => x.min(y),
            (x, y) => x.or(y).expect("loop condition"),
        };
        let fired = timeline.advance(now)?;
        let mut outs = Vec::new();
        while arrivals.last().is_some_and(|(_, t)| *t == now) {
            let (flow, stamp) = arrivals.pop().expect("checked");
            let slice = SynchronousSlice::single(stamp, site.clone(), flow.clone(), vec![1]);
            outs.push(engine.step(EngineEvent::SliceArrived {
                flow: flow.clone(),
                slice,
                arrival: now,
            })?);
        }
        for f in fired {
            outs.push(engine.step(EngineEvent::TimerFired {
                token: f.payload,
                at: f.fire_at,
            })?);
        }
        for out in outs {
            for t in out.timers {
                timeline.schedule(t.delay, t.token);
            }
            for e in out.emitted {
                println!(
                    "t={now:>2} window [{}, {}] used {:?}",
                    e.record.output_ts,
                    e.record.output_ts + 10,
                    e.record.used
                );
            }
        }
    }
    for flow in [&a, &b] {
        engine.step(EngineEvent::FlowEnded {
            flow: flow.clone(),
            at: 50,
        })?;
    }
    println!(
        "{} composed slices, none with a TMAX",
        engine.records().len()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
