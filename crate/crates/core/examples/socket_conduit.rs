// A scenario replayed over a loopback TCP connection into a live engine.

use std::net::TcpListener;
use std::time::Duration;

use korrontea::fusion::PolicyParams;
use korrontea::sim::{live, parse_trace, FlowSpec, ScenarioConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ScenarioConfig::new(10, 4, 30, 8)
        .with_hard(FlowSpec::new(0, 10, 3))
        .with_soft(FlowSpec::new(0, 15, 3));
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let tick = Duration::from_micros(500);

    let feeder = {
        let cfg = cfg.clone();
        std::thread::spawn(move || live::feed(addr, &cfg, tick))
    };
    let mut trace = Vec::new();
    let summary = live::serve(
        &listener,
        PolicyParams::new(cfg.theta, cfg.alpha)?,
        tick,
        &mut trace,
    )?;
    let sent = feeder.join().expect("feeder thread")?;

    let text = String::from_utf8(trace)?;
    for line in text.lines().take(5) {
        println!("{line}");
    }
    let parsed = parse_trace(&text)?;
    println!(
        "sent {sent}, received {}, {} composed slices, {} set aside",
        summary.received,
        parsed.records.len(),
        parsed.side_channel.len()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
