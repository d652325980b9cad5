// First and last occurrence over a group of flows.

use korrontea::occurrence::{first_slice, FlowGroup};
use korrontea::{
    Constraint, FlowDescriptor, FlowId, SiteId, SynchronousFlowHistory, SynchronousSlice,
};

fn flow(
    site: &SiteId,
    name: &str,
    stamps: &[i64],
) -> Result<SynchronousFlowHistory, Box<dyn std::error::Error>> {
    let id = FlowId::new(name)?;
    let desc = FlowDescriptor::new(id.clone(), name, site.clone(), Constraint::Hard);
    let slices = stamps
        .iter()
        .map(|&t| SynchronousSlice::single(t, site.clone(), id.clone(), vec![1]));
    Ok(SynchronousFlowHistory::from_slices(
        site.clone(),
        vec![desc],
        slices,
    )?)
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let site = SiteId::new("L1")?;
    let video = flow(&site, "video", &[0, 40, 80, 120])?;
    let audio = flow(&site, "audio", &[5, 25, 45, 65, 85])?;

    for t in [0, 30, 81] {
        let v = first_slice(&video, t).map(|s| s.time_stamp);
        let a = first_slice(&audio, t).map(|s| s.time_stamp);
        println!("t={t:>3}: next video {v:?}, next audio {a:?}");
    }

    let group = FlowGroup::new(vec![&video, &audio])?;
    for t in [0, 30, 81] {
        println!(
            "t={t:>3}: first occurrence {}, last occurrence {}",
            group.first_occurrence(t)?,
            group.last_occurrence(t)?
        );
    }
    match group.last_occurrence(100) {
        Ok(t) => println!("t=100: last occurrence {t}"),
        Err(e) => println!("t=100: {e}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
