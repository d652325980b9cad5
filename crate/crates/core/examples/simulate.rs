// Running a scenario file, printing its trace and verifying it.

use korrontea::sim::{emit_trace, parse_trace, run_simulation, verify, ScenarioConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/mixed.toml");
    let cfg = ScenarioConfig::load(path)?;
    let out = run_simulation(&cfg)?;
    let text = emit_trace(&out.trace());
    for line in text.lines().take(8) {
        println!("{line}");
    }
    println!("... {} slices in total", out.records.len());

    let report = verify(&parse_trace(&text)?, &cfg)?;
    print!("{report}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
