// Fusing flows offline and splitting the composed flow back apart.

use korrontea::fusion::{oracle_compose, separate, Policy, PolicyParams};
use korrontea::{
    Constraint, FlowDescriptor, FlowId, SiteId, SynchronousFlowHistory, SynchronousSlice,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let site = SiteId::new("L1")?;
    let mut inputs = Vec::new();
    for (name, period) in [("A", 10), ("B", 7)] {
        let id = FlowId::new(name)?;
        let desc = FlowDescriptor::new(id.clone(), name, site.clone(), Constraint::Hard);
        let slices = (0..5).map(|k| {
            let t = k * period;
            SynchronousSlice::single(t, site.clone(), id.clone(), format!("{name}{t}"))
        });
        inputs.push(SynchronousFlowHistory::from_slices(
            site.clone(),
            vec![desc],
            slices,
        )?);
    }

    let composed = oracle_compose(&inputs, PolicyParams::new(10, 0)?, Policy::Hard)?;
    for slice in composed.slices() {
        let parts: Vec<String> = slice
            .units
            .iter()
            .map(|(f, units)| {
                let payloads: Vec<_> = units
                    .iter()
                    .map(|u| String::from_utf8_lossy(&u.samples[0].payload).into_owned())
                    .collect();
                format!("{f}={payloads:?}")
            })
            .collect();
        println!("ts={:>2} {}", slice.time_stamp, parts.join(" "));
    }

    for flow in separate(&composed)? {
        let stamps: Vec<_> = flow.slices().iter().map(|s| s.time_stamp).collect();
        println!("{} back out at stamps {stamps:?}", flow.label());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
