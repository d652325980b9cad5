// Logical and physical clocks, and timers in virtual time.

use korrontea::clock::{LocalPhysicalClock, LogicalClock, TickRate, VirtualTimeline};
use korrontea::SiteId;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut seq = LogicalClock::new();
    let numbers: Vec<_> = (0..3).map(|_| seq.next_sequence_number()).collect();
    println!("sequence numbers: {numbers:?}");

    let mut clock = LocalPhysicalClock::simulated(SiteId::new("L1")?, 100);
    let a = clock.now();
    let b = clock.now();
    clock.advance(5);
    println!("simulated stamps: {a}, {b}, {}", clock.now());

    let live = LocalPhysicalClock::live(SiteId::new("L2")?, TickRate::millis());
    println!("live clock reads {} ms since creation", live.raw());

    let mut timeline = VirtualTimeline::new(0);
    timeline.schedule(10, "alpha expired");
    timeline.schedule(3, "first");
    timeline.schedule(3, "second, same tick");
    for fired in timeline.advance(10)? {
        println!("t={:>2} {}", fired.fire_at, fired.payload);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
