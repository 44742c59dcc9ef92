//! Full-duplex sum rate with and without distortion suppression against
//! half duplex, over the SNR sweep of the fig6 preset.

use fdsic::harness::{run_sweep, ScenarioConfig};
use fdsic::BaselineMode;

fn main() -> fdsic::Result<()> {
    let mut cfg = ScenarioConfig::preset("fig6")?;
    cfg.n_monte_carlo = 50;
    let result = run_sweep(&cfg)?;
    println!("{:>5} {:>10} {:>10} {:>10}", "SNR", "FD prop", "FD none", "HD");
    for pair in result.rows.chunks(2) {
        let (p, s) = match pair[0].cell.baseline {
            BaselineMode::Proposed => (&pair[0], &pair[1]),
            _ => (&pair[1], &pair[0]),
        };
        println!("{:5.1} {:10.3} {:10.3} {:10.3}", p.cell.snr_db, p.rate_fd, s.rate_fd, p.rate_hd);
    }
    Ok(())
}
