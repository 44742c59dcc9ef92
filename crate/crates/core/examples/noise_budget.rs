//! Power of each impairment at the ADC as the received SI power grows.

use fdsic::harness::{run_budget, ScenarioConfig};

fn main() -> fdsic::Result<()> {
    let cfg = ScenarioConfig::preset("fig2")?;
    println!("{:>8} {:>11} {:>11} {:>11} {:>11}", "SI", "distortion", "phase", "quant", "awgn");
    for r in run_budget(&cfg)? {
        println!(
            "{:8.1} {:11.2} {:11.2} {:11.2} {:11.2}",
            r.si_power_db.0, r.distortion_db.0, r.phase_noise_db.0, r.quantization_db.0, r.awgn_db.0
        );
    }
    Ok(())
}
