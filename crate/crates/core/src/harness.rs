//! Scenario files, Monte Carlo cells, sweeps and result emission.
//!
//! A scenario is one TOML file. Scalar fields describe a single cell; the
//! optional `[sweep]` table lists values for the swept axes, and the sweep
//! is the Cartesian product of all listed axes. Cells are numbered in
//! row-major order with the baseline axis varying fastest.
//!
//! Each cell draws its trials from `ChaCha8Rng::seed_from_u64(cell_seed)`
//! with the stream set to the trial index, where
//! `cell_seed = seed XOR splitmix64(cell_index)`.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::PowerDelayProfile;
use crate::dsp::{self, OfdmGeometry};
use crate::error::{Error, Result};
use crate::estimation::{CoefficientEstimator, EstimationConfig, EstimationRecord, ResidualUpdate, SuccessiveOptions};
use crate::impairments::{ImpairmentConfig, NonlinearityCoefficients, MIN_CUBIC_OVERSAMPLING};
use crate::metrics::{self, BudgetRow, RidnPowers, RidnReport};
use crate::serde_db::Db;
use crate::sim::{self, BaselineMode, TrialSetup};

/// Version of the CSV column layout in [`CSV_COLUMNS`].
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// CSV header, in order.
pub const CSV_COLUMNS: &[&str] = &[
    "si_power_db",
    "iteration",
    "ridn_total_db",
    "ridn_interference_db",
    "ridn_distortion_db",
    "ridn_phase_noise_db",
    "ridn_quantization_db",
    "ridn_awgn_db",
    "rate_fd",
    "rate_hd",
    "cell",
    "baseline",
    "distortion_tx_db",
    "distortion_rx_db",
    "phase_noise_db",
    "snr_db",
    "ridn_std_err_db",
    "ridn_by_iteration_db",
    "residual_db",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OfdmConfig {
    pub n_subcarriers: usize,
    pub cp_len: usize,
    pub oversampling: usize,
    /// Data symbols per frame, after the single training symbol.
    pub data_symbols: usize,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self { n_subcarriers: 64, cp_len: 16, oversampling: 4, data_symbols: 10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub n_taps: usize,
    /// Exponential power-delay-profile decay constant, in taps.
    pub pdp_decay: f64,
    pub si_k_db: f64,
    pub soi_k_db: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { n_taps: 8, pdp_decay: 3.0, si_k_db: 30.0, soi_k_db: 3.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    /// Received self-interference power, dB relative to unit power.
    pub si_power_db: f64,
    /// Signal-of-interest power over the AWGN power.
    pub snr_db: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self { si_power_db: 0.0, snr_db: 20.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationSettings {
    pub n_outer: usize,
    pub n_inner: usize,
    /// Taps kept by the CIR denoiser; defaults to the cyclic prefix length.
    pub denoise_len: Option<usize>,
    pub estimator: CoefficientEstimator,
    pub residual_update: ResidualUpdate,
}

impl Default for EstimationSettings {
    fn default() -> Self {
        Self {
            n_outer: 4,
            n_inner: 3,
            denoise_len: None,
            estimator: CoefficientEstimator::Projection,
            residual_update: ResidualUpdate::Literal,
        }
    }
}

/// Swept axes. An absent axis keeps the scalar value of the scenario; an
/// empty list yields an empty sweep.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub distortion_tx_db: Option<Vec<f64>>,
    pub distortion_rx_db: Option<Vec<f64>>,
    /// Explicit `(tx, rx)` pairs; replaces the two axes above.
    pub distortion_pairs: Option<Vec<[f64; 2]>>,
    pub phase_noise_db: Option<Vec<f64>>,
    pub snr_db: Option<Vec<f64>>,
    pub si_power_db: Option<Vec<f64>>,
    pub baseline: Option<Vec<BaselineMode>>,
}

impl SweepAxes {
    pub fn is_empty(&self) -> bool {
        *self == SweepAxes::default()
    }
}

/// Settings of the `budget` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    /// SI power at which the configured distortion levels hold.
    pub reference_si_db: f64,
    pub si_power_db: Vec<f64>,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self { reference_si_db: 0.0, si_power_db: (0..=12).map(|i| -60.0 + 5.0 * i as f64).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub n_monte_carlo: usize,
    pub baseline: BaselineMode,
    pub ofdm: OfdmConfig,
    pub channel: ChannelConfig,
    pub impairments: ImpairmentConfig,
    pub link: LinkConfig,
    pub estimation: EstimationSettings,
    pub sweep: SweepAxes,
    pub budget: BudgetConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            seed: 1,
            n_monte_carlo: 200,
            baseline: BaselineMode::Proposed,
            ofdm: OfdmConfig::default(),
            channel: ChannelConfig::default(),
            impairments: ImpairmentConfig::default(),
            link: LinkConfig::default(),
            estimation: EstimationSettings::default(),
            sweep: SweepAxes::default(),
            budget: BudgetConfig::default(),
        }
    }
}

/// Shipped scenarios.
pub mod presets {
    pub const FIG2: &str = include_str!("../presets/fig2.toml");
    pub const FIG4: &str = include_str!("../presets/fig4.toml");
    pub const FIG5: &str = include_str!("../presets/fig5.toml");
    pub const FIG6: &str = include_str!("../presets/fig6.toml");

    pub const NAMES: &[&str] = &["fig2", "fig4", "fig5", "fig6"];

    pub fn source(name: &str) -> Option<&'static str> {
        match name {
            "fig2" => Some(FIG2),
            "fig4" => Some(FIG4),
            "fig5" => Some(FIG5),
            "fig6" => Some(FIG6),
            _ => None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(src: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a scenario file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        let cfg: ScenarioConfig =
            toml::from_str(&src).map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let src = presets::source(name)
            .ok_or_else(|| Error::Config(format!("unknown preset {name:?}; known: {}", presets::NAMES.join(", "))))?;
        Self::from_toml_str(src)
    }

    /// A file path, or the name of a shipped preset when no such file exists.
    pub fn load_or_preset(spec: &str) -> Result<Self> {
        if Path::new(spec).exists() || presets::source(spec).is_none() {
            Self::load(spec)
        } else {
            Self::preset(spec)
        }
    }

    pub fn geometry(&self) -> OfdmGeometry {
        OfdmGeometry { n_subcarriers: self.ofdm.n_subcarriers, cp_len: self.ofdm.cp_len }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.n_monte_carlo == 0 {
            return cfg_err("n_monte_carlo must be at least 1".into());
        }
        self.geometry().validate().map_err(as_config)?;
        if self.ofdm.oversampling < MIN_CUBIC_OVERSAMPLING {
            return cfg_err(format!("oversampling must be at least {MIN_CUBIC_OVERSAMPLING}"));
        }
        if self.ofdm.data_symbols == 0 {
            return cfg_err("at least one data symbol is required".into());
        }
        if self.channel.n_taps == 0 || self.channel.n_taps > self.ofdm.cp_len {
            return cfg_err(format!(
                "channel taps ({}) must be between 1 and the cyclic prefix length ({})",
                self.channel.n_taps, self.ofdm.cp_len
            ));
        }
        if !(self.channel.pdp_decay > 0.0) {
            return cfg_err("pdp_decay must be positive".into());
        }
        for (name, v) in [
            ("si_k_db", self.channel.si_k_db),
            ("soi_k_db", self.channel.soi_k_db),
            ("si_power_db", self.link.si_power_db),
            ("snr_db", self.link.snr_db),
        ] {
            if !v.is_finite() {
                return cfg_err(format!("{name} must be finite, got {v}"));
            }
        }
        if self.estimation.n_outer == 0 || self.estimation.n_inner == 0 {
            return cfg_err("n_outer and n_inner must be at least 1".into());
        }
        let l = self.denoise_len();
        if l == 0 || l > self.ofdm.n_subcarriers {
            return cfg_err(format!("denoise_len {l} must be in 1..={}", self.ofdm.n_subcarriers));
        }
        self.impairments.validate().map_err(as_config)?;
        let axes = &self.sweep;
        let finite_axes = [("sweep.si_power_db", &axes.si_power_db), ("sweep.snr_db", &axes.snr_db)];
        for (name, values) in finite_axes {
            if let Some(v) = values.iter().flatten().find(|v| !v.is_finite()) {
                return cfg_err(format!("{name} must be finite, got {v}"));
            }
        }
        if axes.distortion_pairs.is_some() && (axes.distortion_tx_db.is_some() || axes.distortion_rx_db.is_some()) {
            return cfg_err("sweep.distortion_pairs cannot be combined with distortion_tx_db/distortion_rx_db".into());
        }
        for cell in self.cells() {
            cell.impairments.validate().map_err(|e| Error::Config(format!("sweep cell {}: {e}", cell.index)))?;
        }
        Ok(())
    }

    pub fn denoise_len(&self) -> usize {
        self.estimation.denoise_len.unwrap_or(self.ofdm.cp_len)
    }

    pub fn estimation_config(&self) -> EstimationConfig {
        EstimationConfig {
            n_outer: self.estimation.n_outer,
            successive: SuccessiveOptions {
                n_inner: self.estimation.n_inner,
                estimator: self.estimation.estimator,
                update: self.estimation.residual_update,
                forced_start: None,
            },
            denoise_len: self.denoise_len(),
            cubic: self.impairments.cubic,
        }
    }

    /// The swept cells in index order.
    pub fn cells(&self) -> Vec<CellParams> {
        let a = &self.sweep;
        let imp = &self.impairments;
        let distortion: Vec<[f64; 2]> = match &a.distortion_pairs {
            Some(p) => p.clone(),
            None => {
                let tx = a.distortion_tx_db.clone().unwrap_or_else(|| vec![imp.distortion_tx_db]);
                let rx = a.distortion_rx_db.clone().unwrap_or_else(|| vec![imp.distortion_rx_db]);
                tx.iter().flat_map(|&t| rx.iter().map(move |&r| [t, r])).collect()
            }
        };
        let phase = a.phase_noise_db.clone().unwrap_or_else(|| vec![imp.phase_noise_db]);
        let snr = a.snr_db.clone().unwrap_or_else(|| vec![self.link.snr_db]);
        let si = a.si_power_db.clone().unwrap_or_else(|| vec![self.link.si_power_db]);
        let baseline = a.baseline.clone().unwrap_or_else(|| vec![self.baseline]);

        let mut cells = Vec::new();
        for &[tx, rx] in &distortion {
            for &pn in &phase {
                for &s in &snr {
                    for &p in &si {
                        for &b in &baseline {
                            let mut impairments = imp.clone();
                            impairments.distortion_tx_db = tx;
                            impairments.distortion_rx_db = rx;
                            impairments.phase_noise_db = pn;
                            cells.push(CellParams {
                                index: cells.len(),
                                baseline: b,
                                impairments,
                                si_power_db: p,
                                snr_db: s,
                            });
                        }
                    }
                }
            }
        }
        cells
    }

    /// The scenario's own scalar settings as a single cell.
    pub fn base_cell(&self) -> CellParams {
        CellParams {
            index: 0,
            baseline: self.baseline,
            impairments: self.impairments.clone(),
            si_power_db: self.link.si_power_db,
            snr_db: self.link.snr_db,
        }
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// The per-cell values of the swept axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    pub index: usize,
    pub baseline: BaselineMode,
    pub impairments: ImpairmentConfig,
    #[serde(with = "crate::serde_db::plain")]
    pub si_power_db: f64,
    #[serde(with = "crate::serde_db::plain")]
    pub snr_db: f64,
}

/// Mixes a cell index into a seed (splitmix64 finalizer).
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn cell_seed(master: u64, index: usize) -> u64 {
    master ^ splitmix64(index as u64)
}

/// Monte Carlo averages of one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellOutcome {
    /// Mean RIDN powers after the last iteration.
    pub ridn: RidnPowers,
    /// Standard error of the mean total RIDN, in dB.
    pub ridn_std_err_db: f64,
    /// Mean total RIDN after each outer iteration, in dB.
    pub ridn_by_iteration_db: Vec<f64>,
    /// Mean training residual power after each outer iteration, in dB.
    pub residual_db: Vec<f64>,
    pub rate_fd: f64,
    pub rate_hd: f64,
    /// Mean true distortion power on the data symbols, in dB.
    pub distortion_db: f64,
    /// Estimates of the first trial.
    pub estimation: EstimationRecord,
    /// Final total RIDN power of every trial, in trial order.
    pub trial_totals: Vec<f64>,
}

/// Standard error, in dB, of the difference between the mean RIDN of two
/// cells run on the same seed (common random numbers).
///
/// Uses the first-order expansion of `10·log10(mean)` around each mean.
pub fn paired_std_err_db(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidArgument("paired samples need equal lengths of at least two".into()));
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x / ma - y / mb).collect();
    let md = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - md).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(10.0 / std::f64::consts::LN_10 * (var / n).sqrt())
}

fn trial_setup(cfg: &ScenarioConfig, cell: &CellParams) -> Result<TrialSetup> {
    let geometry = cfg.geometry();
    let coeffs = if cell.baseline == BaselineMode::Linear {
        NonlinearityCoefficients::zero()
    } else {
        sim::calibrated_coefficients(&cell.impairments, geometry, cfg.ofdm.oversampling)?
    };
    let mut estimation = cfg.estimation_config();
    estimation.cubic = cell.impairments.cubic;
    Ok(TrialSetup {
        geometry,
        oversampling: cfg.ofdm.oversampling,
        data_symbols: cfg.ofdm.data_symbols,
        pdp: PowerDelayProfile::exponential(cfg.channel.n_taps, cfg.channel.pdp_decay)?,
        si_k_db: cfg.channel.si_k_db,
        soi_k_db: cfg.channel.soi_k_db,
        si_power_db: cell.si_power_db,
        snr_db: cell.snr_db,
        impairments: cell.impairments.clone(),
        coeffs,
        estimation,
        mode: cell.baseline,
    })
}

/// Runs all trials of one cell and averages them.
pub fn run_cell(cfg: &ScenarioConfig, cell: &CellParams, seed: u64) -> Result<CellOutcome> {
    cfg.validate()?;
    cell.impairments.validate()?;
    let setup = trial_setup(cfg, cell)?;
    let trials = (0..cfg.n_monte_carlo)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            sim::simulate_trial(&setup, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    let n = trials.len() as f64;
    let n_iter = trials[0].ridn_by_iteration.len();
    let mut by_iter = vec![RidnPowers::zeros(cfg.ofdm.n_subcarriers); n_iter];
    let mut residual = vec![0.0; n_iter];
    let (mut rate_fd, mut rate_hd, mut distortion) = (0.0, 0.0, 0.0);
    for t in &trials {
        for (acc, p) in by_iter.iter_mut().zip(&t.ridn_by_iteration) {
            acc.accumulate(p, 1.0 / n);
        }
        for (acc, s) in residual.iter_mut().zip(&t.estimation.iterations) {
            *acc += dsp::from_db(s.residual_db) / n;
        }
        rate_fd += t.rate_fd / n;
        rate_hd += t.rate_hd / n;
        distortion += t.distortion_power / n;
    }
    let ridn = by_iter.last().cloned().expect("at least one iteration");
    let ridn_std_err_db = if trials.len() > 1 {
        let var = trials.iter().map(|t| (t.final_ridn().total - ridn.total).powi(2)).sum::<f64>() / (n - 1.0);
        10.0 / std::f64::consts::LN_10 * (var / n).sqrt() / ridn.total
    } else {
        0.0
    };
    Ok(CellOutcome {
        ridn_std_err_db,
        ridn_by_iteration_db: by_iter.iter().map(|p| dsp::to_db(p.total)).collect(),
        residual_db: residual.into_iter().map(dsp::to_db).collect(),
        ridn,
        rate_fd,
        rate_hd,
        distortion_db: dsp::to_db(distortion),
        estimation: trials[0].estimation.to_record(),
        trial_totals: trials.iter().map(|t| t.final_ridn().total).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub name: String,
    pub seed: u64,
    pub version: String,
    pub csv_schema: u32,
    /// Seconds since the Unix epoch; set by the caller, absent otherwise so
    /// that library runs stay reproducible byte for byte.
    pub timestamp: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: CellParams,
    pub ridn: RidnReport,
    pub ridn_std_err_db: Db,
    pub ridn_by_iteration_db: Vec<Db>,
    pub residual_db: Vec<Db>,
    pub rate_fd: f64,
    pub rate_hd: f64,
    pub distortion_db: Db,
    pub estimation: EstimationRecord,
}

impl SweepRow {
    fn new(cell: CellParams, out: CellOutcome) -> Self {
        Self {
            cell,
            ridn: out.ridn.to_report(),
            ridn_std_err_db: Db(out.ridn_std_err_db),
            ridn_by_iteration_db: out.ridn_by_iteration_db.into_iter().map(Db).collect(),
            residual_db: out.residual_db.into_iter().map(Db).collect(),
            rate_fd: out.rate_fd,
            rate_hd: out.rate_hd,
            distortion_db: Db(out.distortion_db),
            estimation: out.estimation,
        }
    }

    /// Final mean total RIDN in dB.
    pub fn total_db(&self) -> f64 {
        self.ridn.total_ridn_db.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub metadata: SweepMetadata,
    pub rows: Vec<SweepRow>,
}

fn metadata(cfg: &ScenarioConfig) -> SweepMetadata {
    SweepMetadata {
        name: cfg.name.clone(),
        seed: cfg.seed,
        version: concat!("v", env!("CARGO_PKG_VERSION")).to_string(),
        csv_schema: CSV_SCHEMA_VERSION,
        timestamp: None,
    }
}

fn run_cells(cfg: &ScenarioConfig, cells: Vec<CellParams>) -> Result<SweepResult> {
    cfg.validate()?;
    let rows = cells
        .into_par_iter()
        .map(|cell| {
            let out = run_cell(cfg, &cell, cell_seed(cfg.seed, cell.index))?;
            Ok(SweepRow::new(cell, out))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { metadata: metadata(cfg), rows })
}

/// Runs every cell of the scenario's sweep.
pub fn run_sweep(cfg: &ScenarioConfig) -> Result<SweepResult> {
    run_cells(cfg, cfg.cells())
}

/// Runs the scenario's scalar settings only, ignoring the sweep axes.
pub fn run_single(cfg: &ScenarioConfig) -> Result<SweepResult> {
    run_cells(cfg, vec![cfg.base_cell()])
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

fn join_db(v: &[Db]) -> String {
    v.iter().map(Db::to_string).collect::<Vec<_>>().join(";")
}

/// Writes the sweep in the given format.
pub fn write_sweep<W: Write>(result: &SweepResult, format: OutputFormat, out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Io { path: "<output>".into(), source: e };
    match format {
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, result).map_err(|e| io(e.into()))?;
            writeln!(out).map_err(io)
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let csv_err = |e: csv::Error| io(e.into());
            w.write_record(CSV_COLUMNS).map_err(csv_err)?;
            for row in &result.rows {
                let r = &row.ridn;
                let imp = &row.cell.impairments;
                w.write_record([
                    Db(row.cell.si_power_db).to_string(),
                    row.ridn_by_iteration_db.len().to_string(),
                    r.total_ridn_db.to_string(),
                    r.residual_interference_db.to_string(),
                    r.residual_distortion_db.to_string(),
                    r.phase_noise_db.to_string(),
                    r.quantization_db.to_string(),
                    r.awgn_db.to_string(),
                    row.rate_fd.to_string(),
                    row.rate_hd.to_string(),
                    row.cell.index.to_string(),
                    row.cell.baseline.as_str().to_string(),
                    Db(imp.distortion_tx_db).to_string(),
                    Db(imp.distortion_rx_db).to_string(),
                    Db(imp.phase_noise_db).to_string(),
                    Db(row.cell.snr_db).to_string(),
                    row.ridn_std_err_db.to_string(),
                    join_db(&row.ridn_by_iteration_db),
                    join_db(&row.residual_db),
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(io)
        }
    }
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|source| Error::Io { path: path.into(), source })
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Io { source, .. } => Error::Io { path: path.into(), source },
        other => other,
    }
}

/// Writes the sweep to `path`.
pub fn emit(result: &SweepResult, format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = create(path)?;
    write_sweep(result, format, std::io::BufWriter::new(file)).map_err(|e| with_path(path, e))
}

/// Reads a sweep written with [`OutputFormat::Json`].
pub fn load_json(path: impl AsRef<Path>) -> Result<SweepResult> {
    let path = path.as_ref();
    let src = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    serde_json::from_str(&src).map_err(|e| Error::Parse { path: path.into(), message: e.to_string() })
}

/// Noise-budget table of the scenario's `[budget]` settings.
pub fn run_budget(cfg: &ScenarioConfig) -> Result<Vec<BudgetRow>> {
    cfg.validate()?;
    metrics::noise_budget(
        &cfg.impairments,
        cfg.geometry(),
        cfg.ofdm.oversampling,
        cfg.budget.reference_si_db,
        &cfg.budget.si_power_db,
        cfg.seed,
    )
}

pub const BUDGET_COLUMNS: &[&str] = &["si_power_db", "distortion_db", "phase_noise_db", "quantization_db", "awgn_db"];

pub fn write_budget<W: Write>(rows: &[BudgetRow], format: OutputFormat, out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Io { path: "<output>".into(), source: e };
    match format {
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows).map_err(|e| io(e.into()))?;
            writeln!(out).map_err(io)
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let csv_err = |e: csv::Error| io(e.into());
            w.write_record(BUDGET_COLUMNS).map_err(csv_err)?;
            for r in rows {
                w.write_record([
                    r.si_power_db.to_string(),
                    r.distortion_db.to_string(),
                    r.phase_noise_db.to_string(),
                    r.quantization_db.to_string(),
                    r.awgn_db.to_string(),
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(io)
        }
    }
}

pub fn emit_budget(rows: &[BudgetRow], format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = create(path)?;
    write_budget(rows, format, std::io::BufWriter::new(file)).map_err(|e| with_path(path, e))
}
