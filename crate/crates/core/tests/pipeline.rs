use fdsic::dsp;
use fdsic::harness::{self, run_cell, run_single, run_sweep, OutputFormat, ScenarioConfig, CSV_COLUMNS};
use fdsic::{BaselineMode, Error};

fn quick(trials: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::preset("fig4").unwrap();
    cfg.n_monte_carlo = trials;
    cfg.sweep = Default::default();
    cfg
}

fn csv_bytes(result: &harness::SweepResult) -> Vec<u8> {
    let mut buf = Vec::new();
    harness::write_sweep(result, OutputFormat::Csv, &mut buf).unwrap();
    buf
}

#[test]
fn linear_baseline_sits_on_the_impairment_floor() {
    let mut cfg = quick(100);
    cfg.baseline = BaselineMode::Linear;
    let out = run_cell(&cfg, &cfg.base_cell(), 5).unwrap();
    assert_eq!(out.ridn.distortion, 0.0);
    // Phase noise and AWGN also leak into the channel estimate, so the
    // total exceeds the component floor by a bounded margin.
    let floor = out.ridn.phase_noise + out.ridn.quantization + out.ridn.awgn;
    let excess = dsp::to_db(out.ridn.total) - dsp::to_db(floor);
    assert!((0.0..3.0).contains(&excess), "excess {excess}");
}

#[test]
fn no_suppression_is_distortion_limited() {
    let mut cfg = quick(100);
    cfg.baseline = BaselineMode::NoSuppression;
    cfg.impairments.distortion_tx_db = -45.0;
    cfg.impairments.distortion_rx_db = f64::NEG_INFINITY;
    let out = run_cell(&cfg, &cfg.base_cell(), 5).unwrap();
    // Without suppression the residual is the distortion plus the part of it
    // absorbed by the channel estimate (L/N of its power, uncorrelated).
    let expected = out.distortion_db + dsp::to_db(1.0 + 16.0 / 64.0);
    assert!((dsp::to_db(out.ridn.total) - expected).abs() < 0.5, "{} vs {expected}", dsp::to_db(out.ridn.total));
    assert!((out.distortion_db + 45.0).abs() < 0.5, "{}", out.distortion_db);
}

#[test]
fn proposed_suppresses_distortion() {
    let mut cfg = quick(50);
    cfg.impairments.distortion_tx_db = -45.0;
    cfg.impairments.distortion_rx_db = -55.0;
    let p = run_cell(&cfg, &cfg.base_cell(), 9).unwrap();
    let mut base = cfg.base_cell();
    base.baseline = BaselineMode::NoSuppression;
    let s = run_cell(&cfg, &base, 9).unwrap();
    assert!(dsp::to_db(p.ridn.total) < dsp::to_db(s.ridn.total) - 15.0);
    assert_eq!(p.ridn_by_iteration_db.len(), 4);
    assert_eq!(s.ridn_by_iteration_db.len(), 1);
}

#[test]
fn single_cell_sweep_equals_run_cell() {
    let cfg = quick(20);
    let swept = run_sweep(&cfg).unwrap();
    assert_eq!(swept.rows.len(), 1);
    let direct = run_cell(&cfg, &cfg.base_cell(), harness::cell_seed(cfg.seed, 0)).unwrap();
    assert_eq!(swept.rows[0].ridn, direct.ridn.to_report());
    assert_eq!(swept.rows[0].rate_fd, direct.rate_fd);
    assert_eq!(run_single(&cfg).unwrap(), swept);
}

#[test]
fn identical_configs_give_identical_csv() {
    let mut cfg = quick(10);
    cfg.sweep.phase_noise_db = Some(vec![-70.0, -60.0]);
    cfg.sweep.baseline = Some(vec![BaselineMode::Proposed, BaselineMode::Linear]);
    let a = csv_bytes(&run_sweep(&cfg).unwrap());
    let b = csv_bytes(&run_sweep(&cfg).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 1 + 4);
    assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
}

#[test]
fn empty_sweep_writes_only_the_header() {
    let mut cfg = quick(10);
    cfg.sweep.snr_db = Some(vec![]);
    let result = run_sweep(&cfg).unwrap();
    assert!(result.rows.is_empty());
    let text = String::from_utf8(csv_bytes(&result)).unwrap();
    assert_eq!(text, format!("{}\n", CSV_COLUMNS.join(",")));
}

#[test]
fn json_round_trip() {
    let mut cfg = quick(5);
    cfg.impairments.phase_noise_db = f64::NEG_INFINITY;
    cfg.baseline = BaselineMode::Linear;
    let result = run_sweep(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.json");
    harness::emit(&result, OutputFormat::Json, &path).unwrap();
    assert_eq!(harness::load_json(&path).unwrap(), result);

    let csv_path = dir.path().join("sweep.csv");
    harness::emit(&result, OutputFormat::Csv, &csv_path).unwrap();
    assert_eq!(std::fs::read(&csv_path).unwrap(), csv_bytes(&result));
}

#[test]
fn io_errors_carry_the_path() {
    let result = run_sweep(&quick(2)).unwrap();
    let path = std::path::Path::new("/nonexistent-dir/out.csv");
    match harness::emit(&result, OutputFormat::Csv, path) {
        Err(Error::Io { path: p, .. }) => assert_eq!(p, path),
        other => panic!("expected an I/O error, got {other:?}"),
    }
    assert!(matches!(ScenarioConfig::load("/nonexistent.toml"), Err(Error::Io { .. })));
}

#[test]
fn budget_slopes_follow_the_power_laws() {
    let cfg = ScenarioConfig::preset("fig2").unwrap();
    let rows = harness::run_budget(&cfg).unwrap();
    let slope = |f: &dyn Fn(&fdsic::metrics::BudgetRow) -> f64| {
        let xs: Vec<f64> = rows.iter().map(|r| r.si_power_db.0).collect();
        let ys: Vec<f64> = rows.iter().map(f).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        cov / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
    };
    assert!((slope(&|r| r.distortion_db.0) - 3.0).abs() < 0.1);
    assert!((slope(&|r| r.phase_noise_db.0) - 1.0).abs() < 0.1);
    assert!(slope(&|r| r.awgn_db.0).abs() < 0.1);
    let top = rows.last().unwrap();
    assert!(top.distortion_db.0 > top.phase_noise_db.0);
    assert!(top.phase_noise_db.0 > top.awgn_db.0.max(top.quantization_db.0));
}
