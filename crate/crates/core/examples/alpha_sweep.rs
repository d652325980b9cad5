// Accuracy against latency as `alpha` grows.

use korrontea::sim::{sweep_alpha, sweep_csv, ScenarioConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/sweep.toml");
    let cfg = ScenarioConfig::load(path)?;
    let rows = sweep_alpha(&cfg, 0, cfg.max_delay())?;
    print!("{}", sweep_csv(&rows));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
