// Building a primitive flow, navigating it and checking its constraint.

use korrontea::model::{compare_slices, time_interval, validate_slice};
use korrontea::{
    Constraint, FlowDescriptor, FlowId, SiteId, SynchronousFlowHistory, SynchronousSlice,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let site = SiteId::new("L1")?;
    let audio = FlowId::new("audio")?;
    let desc = FlowDescriptor::new(audio.clone(), "mic-0", site.clone(), Constraint::Hard)
        .with_format("pcm-s16le")
        .with_period(20);

    let mut history = SynchronousFlowHistory::primitive(desc.clone());
    for t in [0, 20, 40, 55] {
        history.push(SynchronousSlice::single(
            t,
            site.clone(),
            audio.clone(),
            vec![0u8; 4],
        ))?;
    }

    let second = &history.slices()[1];
    validate_slice(second).map_err(|v| format!("{v:?}"))?;
    let prev = history.prev(second)?.expect("has a predecessor");
    let next = history.next(second)?.expect("has a successor");
    println!(
        "slice at {} sits between {} and {}; order {:?}",
        second.time_stamp,
        prev.time_stamp,
        next.time_stamp,
        compare_slices(prev, next)
    );
    println!("gap to next: {} ticks", time_interval(second, next)?);
    println!(
        "sample format: {}",
        second.units_of(&audio)[0].samples[0].format(&desc)
    );

    for theta in [10, 20, 30] {
        println!("theta {theta:>2}: {:?}", history.check_constraint(theta)?);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
