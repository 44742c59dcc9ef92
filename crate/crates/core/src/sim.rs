//! One Monte Carlo trial of a full-duplex frame: one training symbol
//! followed by data symbols, passed through the complete impairment chain
//! and then through the selected cancellation pipeline.
//!
//! Per OFDM symbol the self-interference path is evaluated on the
//! CP-stripped block, where the cyclic prefix turns every linear filter
//! into a circular one. The time-domain frame (with cyclic prefixes) is
//! then rebuilt so that phase noise, receiver noise and the ADC act on the
//! contiguous sample stream.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelResponse, PowerDelayProfile};
use crate::dsp::{self, ComplexSignal, OfdmGeometry, OfdmGrid};
use crate::error::Result;
use crate::estimation::{self, EstimationConfig, EstimationReport};
use crate::impairments::{self, CubicConvention, FullScale, ImpairmentConfig, NonlinearityCoefficients, Quantizer};
use crate::metrics::{self, RidnInputs, RidnPowers};

/// Seed of the fixed reference waveform used to calibrate coefficients.
const CALIBRATION_SEED: u64 = 0x5eed_ca1b;
/// OFDM symbols in the calibration reference.
const CALIBRATION_SYMBOLS: usize = 2048;

/// Which receiver is simulated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMode {
    /// Joint iterative channel and nonlinearity estimation with distortion
    /// suppression.
    #[default]
    Proposed,
    /// Nonlinear transceiver, linear cancellation only.
    NoSuppression,
    /// Linear transceiver (no distortion at all), linear cancellation.
    Linear,
}

impl BaselineMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BaselineMode::Proposed => "proposed",
            BaselineMode::NoSuppression => "no-suppression",
            BaselineMode::Linear => "linear",
        }
    }
}

impl std::str::FromStr for BaselineMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "proposed" => Ok(BaselineMode::Proposed),
            "no-suppression" | "no_suppression" => Ok(BaselineMode::NoSuppression),
            "linear" => Ok(BaselineMode::Linear),
            other => Err(format!("unknown baseline {other:?}")),
        }
    }
}

/// Unit-power QPSK on every subcarrier.
pub(crate) fn qpsk_symbol<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let re = if rng.random::<bool>() { a } else { -a };
            let im = if rng.random::<bool>() { a } else { -a };
            Complex64::new(re, im)
        })
        .collect()
}

/// Unit-modulus subcarriers with uniform random phase.
pub(crate) fn constant_modulus_symbol<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)).collect()
}

/// CP-stripped time block of a frequency-domain symbol at `factor` times
/// the symbol rate.
pub(crate) fn oversampled_block(spectrum: &[Complex64], factor: usize) -> ComplexSignal {
    let padded = dsp::zero_pad_spectrum(spectrum, factor);
    ComplexSignal::from_parts_unchecked(dsp::ifft(&padded), factor)
}

/// Coefficients that put each device's in-band distortion at the configured
/// level relative to its input, averaged over a fixed set of unit-power
/// QPSK OFDM symbols.
pub fn calibrated_coefficients(
    cfg: &ImpairmentConfig,
    geometry: OfdmGeometry,
    oversampling: usize,
) -> Result<NonlinearityCoefficients> {
    let mut rng = ChaCha8Rng::seed_from_u64(CALIBRATION_SEED);
    let reference: Vec<ComplexSignal> = (0..CALIBRATION_SYMBOLS)
        .map(|_| oversampled_block(&qpsk_symbol(&mut rng, geometry.n_subcarriers), oversampling))
        .collect();
    let tx = impairments::calibrate_alpha3_blocks(&reference, cfg.distortion_tx_db, cfg.cubic)?;
    let rx = impairments::calibrate_alpha3_blocks(&reference, cfg.distortion_rx_db, cfg.cubic)?;
    Ok(NonlinearityCoefficients::new(tx, rx))
}

/// Everything a trial needs, resolved from a scenario cell.
#[derive(Clone, Debug)]
pub struct TrialSetup {
    pub geometry: OfdmGeometry,
    pub oversampling: usize,
    pub data_symbols: usize,
    pub pdp: PowerDelayProfile,
    pub si_k_db: f64,
    pub soi_k_db: f64,
    pub si_power_db: f64,
    pub snr_db: f64,
    pub impairments: ImpairmentConfig,
    /// True coefficients of the transceiver (ignored in linear mode).
    pub coeffs: NonlinearityCoefficients,
    pub estimation: EstimationConfig,
    pub mode: BaselineMode,
}

/// Results of one trial.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    /// RIDN on the data symbols after each outer iteration (a single entry
    /// for the baselines).
    pub ridn_by_iteration: Vec<RidnPowers>,
    /// Sum rate of both directions, full duplex.
    pub rate_fd: f64,
    /// Sum rate of both directions, half duplex.
    pub rate_hd: f64,
    /// Mean power of the true distortion on the data symbols.
    pub distortion_power: f64,
    pub estimation: EstimationReport,
}

impl TrialOutcome {
    pub fn final_ridn(&self) -> &RidnPowers {
        self.ridn_by_iteration.last().expect("at least one snapshot")
    }
}

fn grid(geometry: OfdmGeometry, symbols: Vec<Vec<Complex64>>) -> Result<OfdmGrid> {
    OfdmGrid::new(geometry, symbols)
}

/// Adds the cyclic prefix to a CP-stripped block.
fn with_prefix(block: &[Complex64], cp_len: usize) -> impl Iterator<Item = Complex64> + '_ {
    block[block.len() - cp_len..].iter().chain(block.iter()).copied()
}

pub fn simulate_trial<R: Rng + ?Sized>(setup: &TrialSetup, rng: &mut R) -> Result<TrialOutcome> {
    let g = setup.geometry;
    let n = g.n_subcarriers;
    let n_symbols = 1 + setup.data_symbols;
    let frame_len = n_symbols * g.symbol_len();
    let cfg = &setup.impairments;

    // Random draws first, in a fixed order, so that every baseline sees the
    // same realization for the same seed.
    let h_si = channel::generate_channel(setup.si_k_db, &setup.pdp, rng)?;
    let h_soi = channel::generate_channel(setup.soi_k_db, &setup.pdp, rng)?;
    let mut x_i = vec![constant_modulus_symbol(rng, n)];
    for _ in 0..setup.data_symbols {
        x_i.push(qpsk_symbol(rng, n));
    }
    let x_s: Vec<Vec<Complex64>> = (0..setup.data_symbols).map(|_| qpsk_symbol(rng, n)).collect();
    let track = impairments::phase_noise_track(frame_len, cfg.phase_noise_db, cfg.phase_noise_bandwidth, rng)?;
    let noise = impairments::awgn(frame_len, cfg.awgn_db, rng);

    let si_gain = dsp::from_db(setup.si_power_db).sqrt();
    let soi_gain = dsp::from_db(cfg.awgn_db + setup.snr_db).sqrt();
    let h_unit = h_si.response(n)?;
    let h_soi = h_soi.response(n)?;
    let truth = if setup.mode == BaselineMode::Linear { NonlinearityCoefficients::zero() } else { setup.coeffs };

    // Self-interference path per symbol, at the receiver input scale.
    let x_os: Vec<ComplexSignal> = x_i.iter().map(|s| oversampled_block(s, setup.oversampling)).collect();
    let mut d_freq = Vec::with_capacity(n_symbols);
    let mut si_time = Vec::with_capacity(frame_len);
    let mut soi_time = Vec::with_capacity(frame_len);
    for (j, (spec, xo)) in x_i.iter().zip(&x_os).enumerate() {
        let d = if truth.is_zero() {
            vec![Complex64::new(0.0, 0.0); n]
        } else {
            dsp::fft(&impairments::synthesize_distortion(xo, &h_unit, &truth, cfg.cubic)?)
                .into_iter()
                .map(|v| v * si_gain)
                .collect()
        };
        let y_si: Vec<Complex64> =
            spec.iter().zip(h_unit.bins()).zip(&d).map(|((xk, hk), dk)| xk * hk * si_gain + dk).collect();
        si_time.extend(with_prefix(&dsp::ifft(&y_si), g.cp_len));
        let soi: Vec<Complex64> = if j == 0 {
            vec![Complex64::new(0.0, 0.0); n]
        } else {
            x_s[j - 1].iter().zip(h_soi.bins()).map(|(xk, hk)| xk * hk * soi_gain).collect()
        };
        soi_time.extend(with_prefix(&dsp::ifft(&soi), g.cp_len));
        d_freq.push(d);
    }

    let phase = impairments::phase_noise_term(&si_time, &track);
    let adc_in: Vec<Complex64> =
        (0..frame_len).map(|i| si_time[i] + soi_time[i] + phase[i] + noise[i]).collect();
    let adc_in = ComplexSignal::from_parts_unchecked(adc_in, 1);
    let quantizer = Quantizer::new(cfg.quantizer_bits, FullScale::Loading(cfg.quantizer_loading))?;
    let adc_out = quantizer.quantize(&adc_in);
    let q_err: Vec<Complex64> = adc_out.iter().zip(adc_in.iter()).map(|(a, b)| a - b).collect();

    let y = dsp::demodulate_ofdm(&adc_out, g)?;
    let phase_grid = dsp::demodulate_ofdm(&phase, g)?;
    let q_grid = dsp::demodulate_ofdm(&q_err, g)?;
    let z_grid = dsp::demodulate_ofdm(&noise, g)?;

    // Training symbol: estimation.
    let y_train = ComplexSignal::from_parts_unchecked(dsp::ifft(y.symbol(0)), 1);
    let estimation = match setup.mode {
        BaselineMode::Proposed => estimation::joint_iterative_estimate(&y_train, &x_os[0], &setup.estimation)?,
        BaselineMode::NoSuppression | BaselineMode::Linear => {
            let h_hat = estimation::estimate_channel_only(&y_train, &x_i[0], setup.estimation.denoise_len)?;
            let resid = estimation::linear_residual(&y_train, &x_i[0], &h_hat)?;
            EstimationReport {
                iterations: vec![estimation::IterationSnapshot {
                    h_hat,
                    coeffs: NonlinearityCoefficients::zero(),
                    start: estimation::StartCoefficient::Tx,
                    residual_db: dsp::power_db(&resid),
                }],
            }
        }
    };

    // Data symbols: RIDN after every snapshot.
    let data = 1..n_symbols;
    let data_grid = |src: &OfdmGrid| grid(g, data.clone().map(|j| src.symbol(j).to_vec()).collect());
    let x_data = grid(g, data.clone().map(|j| x_i[j].clone()).collect())?;
    let d_data = grid(g, data.clone().map(|j| d_freq[j].clone()).collect())?;
    let phase_data = data_grid(&phase_grid)?;
    let q_data = data_grid(&q_grid)?;
    let z_data = data_grid(&z_grid)?;
    let h_true = ChannelResponse::from_bins(h_unit.bins().iter().map(|v| v * si_gain).collect())?;

    let mut ridn_by_iteration = Vec::with_capacity(estimation.iterations.len());
    for snap in &estimation.iterations {
        let d_hat = if snap.coeffs.is_zero() {
            OfdmGrid::zeros(g, setup.data_symbols)?
        } else {
            let mut rows = Vec::with_capacity(setup.data_symbols);
            for j in data.clone() {
                rows.push(dsp::fft(&impairments::synthesize_distortion(&x_os[j], &snap.h_hat, &snap.coeffs, cfg.cubic)?));
            }
            grid(g, rows)?
        };
        ridn_by_iteration.push(metrics::compute_ridn(&RidnInputs {
            x_i: &x_data,
            h: &h_true,
            h_hat: &snap.h_hat,
            distortion: &d_data,
            distortion_hat: &d_hat,
            phase_noise: &phase_data,
            quantization: &q_data,
            awgn: &z_data,
        })?);
    }

    let signal: Vec<f64> = h_soi.bins().iter().map(|h| h.norm_sqr() * soi_gain * soi_gain).collect();
    let final_ridn = ridn_by_iteration.last().expect("at least one snapshot");
    let (rate_fd, rate_hd) = if soi_gain > 0.0 {
        let per_direction = metrics::achievable_rate(&signal, &final_ridn.per_subcarrier)?;
        let hd = metrics::half_duplex_rate(&signal, dsp::from_db(cfg.awgn_db))?;
        (metrics::full_duplex_rate(&[per_direction, per_direction]), metrics::full_duplex_rate(&[hd, hd]))
    } else {
        (0.0, 0.0)
    };

    Ok(TrialOutcome {
        ridn_by_iteration,
        rate_fd,
        rate_hd,
        distortion_power: d_data.power(),
        estimation,
    })
}

/// The cubic convention a setup runs with.
pub fn convention(setup: &TrialSetup) -> CubicConvention {
    setup.impairments.cubic
}
