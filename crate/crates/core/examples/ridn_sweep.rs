//! RIDN of the proposed receiver against both baselines, using the fig4
//! preset (or fig5 when given as the first argument) at reduced scale.

use fdsic::harness::{run_sweep, ScenarioConfig};

fn main() -> fdsic::Result<()> {
    let preset = std::env::args().nth(1).unwrap_or_else(|| "fig4".into());
    let mut cfg = ScenarioConfig::preset(&preset)?;
    cfg.n_monte_carlo = 50;
    let result = run_sweep(&cfg)?;
    println!("{:>6} {:>6} {:>6} {:>15} {:>9} {:>7}  per iteration", "tx", "rx", "pn", "baseline", "RIDN", "se");
    for row in &result.rows {
        let imp = &row.cell.impairments;
        let iters: Vec<String> = row.ridn_by_iteration_db.iter().map(|d| format!("{:.1}", d.0)).collect();
        println!(
            "{:6.1} {:6.1} {:6.1} {:>15} {:9.2} {:7.2}  {}",
            imp.distortion_tx_db,
            imp.distortion_rx_db,
            imp.phase_noise_db,
            row.cell.baseline.as_str(),
            row.total_db(),
            row.ridn_std_err_db.0,
            iters.join(" ")
        );
    }
    Ok(())
}
