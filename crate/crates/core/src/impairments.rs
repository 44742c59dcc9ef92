//! Transceiver impairments: third-order PA/LNA nonlinearity, composite
//! distortion of the self-interference path, oscillator phase noise, ADC
//! quantization and receiver Gaussian noise.
//!
//! Every nonlinear product is evaluated on an oversampled, CP-stripped
//! OFDM block and then decimated back to the symbol rate with an ideal
//! anti-alias filter. With the default oversampling of 4 the cubic
//! products (three times the signal bandwidth) never alias.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian, ChannelResponse};
use crate::dsp::{self, ComplexSignal, ResampleDirection};
use crate::error::{invalid, Error, Result};

/// Smallest oversampling factor at which a cubic product does not alias.
pub const MIN_CUBIC_OVERSAMPLING: usize = 3;

/// Phase-noise powers above this break the `e^{jφ} ≈ 1 + jφ` model.
pub const PHASE_NOISE_LIMIT_DB: f64 = -20.0;

/// How `x^3` is read for a complex baseband signal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubicConvention {
    /// `x·x·x`, the polynomial applied literally to the complex envelope.
    #[default]
    Literal,
    /// `|x|^2·x`, the band-pass third-order product that falls on the carrier.
    InBand,
}

impl CubicConvention {
    #[inline]
    pub fn cube(self, x: Complex64) -> Complex64 {
        match self {
            CubicConvention::Literal => x * x * x,
            CubicConvention::InBand => x * x.norm_sqr(),
        }
    }

    /// The fifth-order cross product `s^2·a` of the TX/RX cascade, where
    /// `s` is the linear SI and `a` the channel-filtered TX cube.
    ///
    /// For the in-band form this is the first-order term of
    /// `|s + δ|^2 (s + δ)` in `δ`, divided by 3 so that
    /// `3·α_t·α_r·C` reproduces it for real `α_t`.
    #[inline]
    pub fn cross(self, s: Complex64, a: Complex64) -> Complex64 {
        match self {
            CubicConvention::Literal => s * s * a,
            CubicConvention::InBand => (2.0 * s.norm_sqr() * a + s * s * a.conj()) / 3.0,
        }
    }
}

/// Third-order coefficients of the transmitter PA and receiver LNA, plus
/// the product coefficient `3·α_t·α_r` of their cascade.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityCoefficients {
    pub alpha3_tx: Complex64,
    pub alpha3_rx: Complex64,
    pub cross_term: Complex64,
}

impl NonlinearityCoefficients {
    pub fn new(alpha3_tx: Complex64, alpha3_rx: Complex64) -> Self {
        Self { alpha3_tx, alpha3_rx, cross_term: 3.0 * alpha3_tx * alpha3_rx }
    }

    /// Three independent coefficients, as produced by an unconstrained
    /// least-squares fit.
    pub fn unconstrained(alpha3_tx: Complex64, alpha3_rx: Complex64, cross_term: Complex64) -> Self {
        Self { alpha3_tx, alpha3_rx, cross_term }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.alpha3_tx == Complex64::default()
            && self.alpha3_rx == Complex64::default()
            && self.cross_term == Complex64::default()
    }
}

/// Impairment levels of one scenario. Powers are in dB: distortion and
/// phase noise relative to the received self-interference power, AWGN
/// relative to unit power. `-inf` switches a component off.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpairmentConfig {
    #[serde(with = "crate::serde_db::plain")]
    pub distortion_tx_db: f64,
    #[serde(with = "crate::serde_db::plain")]
    pub distortion_rx_db: f64,
    #[serde(with = "crate::serde_db::plain")]
    pub phase_noise_db: f64,
    /// 3-dB bandwidth of each oscillator's phase process, as a fraction of
    /// the symbol rate.
    pub phase_noise_bandwidth: f64,
    pub quantizer_bits: u32,
    /// ADC full scale in units of the block RMS.
    pub quantizer_loading: f64,
    #[serde(with = "crate::serde_db::plain")]
    pub awgn_db: f64,
    pub cubic: CubicConvention,
}

impl Default for ImpairmentConfig {
    fn default() -> Self {
        Self {
            distortion_tx_db: -45.0,
            distortion_rx_db: -45.0,
            phase_noise_db: -70.0,
            phase_noise_bandwidth: 0.01,
            quantizer_bits: 14,
            quantizer_loading: 4.0,
            awgn_db: -90.0,
            cubic: CubicConvention::default(),
        }
    }
}

impl ImpairmentConfig {
    pub fn validate(&self) -> Result<()> {
        let powers = [
            ("distortion_tx_db", self.distortion_tx_db),
            ("distortion_rx_db", self.distortion_rx_db),
            ("phase_noise_db", self.phase_noise_db),
            ("awgn_db", self.awgn_db),
        ];
        for (name, v) in powers {
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::Config(format!("{name} must be finite or -inf, got {v}")));
            }
        }
        if self.distortion_tx_db >= 0.0 || self.distortion_rx_db >= 0.0 {
            return Err(Error::Config("distortion levels must be below 0 dB".into()));
        }
        if self.phase_noise_db > PHASE_NOISE_LIMIT_DB {
            return Err(Error::PhaseNoiseTooLarge { power_db: self.phase_noise_db, limit_db: PHASE_NOISE_LIMIT_DB });
        }
        if !(4..=16).contains(&self.quantizer_bits) {
            return Err(Error::Config(format!("quantizer_bits {} outside [4, 16]", self.quantizer_bits)));
        }
        if !(self.quantizer_loading > 0.0 && self.quantizer_loading.is_finite()) {
            return Err(Error::Config("quantizer_loading must be positive".into()));
        }
        if !(self.phase_noise_bandwidth > 0.0 && self.phase_noise_bandwidth < 0.5) {
            return Err(Error::Config("phase_noise_bandwidth must lie in (0, 0.5)".into()));
        }
        Ok(())
    }
}

fn require_oversampled(x: &ComplexSignal) -> Result<()> {
    if x.oversampling() < MIN_CUBIC_OVERSAMPLING {
        return Err(Error::Precondition(format!(
            "cubic products need oversampling >= {MIN_CUBIC_OVERSAMPLING}, signal has {}",
            x.oversampling()
        )));
    }
    Ok(())
}

/// Memoryless `y = x + α·x^3` at the signal's own (oversampled) rate.
pub fn apply_cubic(x: &ComplexSignal, alpha3: Complex64, convention: CubicConvention) -> Result<ComplexSignal> {
    require_oversampled(x)?;
    Ok(x.map(|v| v + alpha3 * convention.cube(v)))
}

/// Picks a real, compressive (negative) `α` such that the in-band power of
/// `α·x^3` sits `target_distortion_db` below the power of `x`.
///
/// If the reference is oversampled the cube is decimated to the symbol
/// rate before measuring, so the target refers to in-band distortion.
pub fn calibrate_alpha3(
    x_reference: &ComplexSignal,
    target_distortion_db: f64,
    convention: CubicConvention,
) -> Result<Complex64> {
    calibrate_alpha3_blocks(std::slice::from_ref(x_reference), target_distortion_db, convention)
}

/// [`calibrate_alpha3`] over several independent blocks, each cubed and
/// decimated on its own. The cube power has heavy tails, so a single short
/// block gives a noisy calibration.
pub fn calibrate_alpha3_blocks(
    blocks: &[ComplexSignal],
    target_distortion_db: f64,
    convention: CubicConvention,
) -> Result<Complex64> {
    if target_distortion_db.is_nan() {
        return Err(invalid("target distortion is NaN"));
    }
    if target_distortion_db == f64::NEG_INFINITY {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if target_distortion_db >= 0.0 {
        return Err(invalid(format!(
            "target distortion {target_distortion_db} dB is outside the weak-nonlinearity regime"
        )));
    }
    if blocks.is_empty() {
        return Err(invalid("no reference blocks"));
    }
    let (mut cube_power, mut input_power) = (0.0, 0.0);
    for x in blocks {
        let cube = x.map(|v| convention.cube(v));
        let in_band = dsp::resample(&cube, x.oversampling(), ResampleDirection::Down)?;
        cube_power += in_band.power();
        input_power += x.power();
    }
    let ratio = cube_power / input_power;
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(invalid("reference signal is degenerate"));
    }
    Ok(Complex64::new(-(dsp::from_db(target_distortion_db) / ratio).sqrt(), 0.0))
}

/// The three oversampled distortion products of the self-interference path
/// for a given channel: `A = x^3 * h`, `B = (x * h)^3`, `C = (x * h)^2 (x^3 * h)`.
pub(crate) struct Products {
    pub s: Vec<Complex64>,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub c: Vec<Complex64>,
}

pub(crate) fn products(x: &ComplexSignal, h: &ChannelResponse, convention: CubicConvention) -> Result<Products> {
    require_oversampled(x)?;
    let s = h.filter(x)?.into_samples();
    let cubed = x.map(|v| convention.cube(v));
    let a = h.filter(&cubed)?.into_samples();
    let b = s.iter().map(|&v| convention.cube(v)).collect();
    let c = s.iter().zip(&a).map(|(&sv, &av)| convention.cross(sv, av)).collect();
    Ok(Products { s, a, b, c })
}

fn decimate(samples: Vec<Complex64>, factor: usize) -> Result<ComplexSignal> {
    dsp::resample(&ComplexSignal::from_parts_unchecked(samples, factor), factor, ResampleDirection::Down)
}

/// Three-term distortion `α_t·A + α_r·B + 3α_tα_r·C`, evaluated at the
/// oversampled rate of `x_i` and returned at the symbol rate.
///
/// `x_i` is one CP-stripped OFDM block of the transmitted self-interference.
pub fn synthesize_distortion(
    x_i: &ComplexSignal,
    h: &ChannelResponse,
    coeffs: &NonlinearityCoefficients,
    convention: CubicConvention,
) -> Result<ComplexSignal> {
    let p = products(x_i, h, convention)?;
    let d: Vec<Complex64> = (0..p.a.len())
        .map(|n| coeffs.alpha3_tx * p.a[n] + coeffs.alpha3_rx * p.b[n] + coeffs.cross_term * p.c[n])
        .collect();
    decimate(d, x_i.oversampling())
}

/// Distortion of the full PA → channel → LNA cascade,
/// `α_t(x^3 * h) + α_r(x * h + α_t x^3 * h)^3`, without dropping any of the
/// higher-order cross products. Used as a reference for the three-term model.
pub fn synthesize_distortion_full(
    x_i: &ComplexSignal,
    h: &ChannelResponse,
    coeffs: &NonlinearityCoefficients,
    convention: CubicConvention,
) -> Result<ComplexSignal> {
    let p = products(x_i, h, convention)?;
    let d: Vec<Complex64> = p
        .s
        .iter()
        .zip(&p.a)
        .map(|(&s, &a)| {
            let tx = coeffs.alpha3_tx * a;
            tx + coeffs.alpha3_rx * convention.cube(s + tx)
        })
        .collect();
    decimate(d, x_i.oversampling())
}

/// Wiener-type oscillator phase: the sum of independent TX and RX
/// processes, each a first-order low-pass (leaky) random walk with 3-dB
/// bandwidth `bandwidth` (fraction of the sample rate), started in steady
/// state and scaled so that `E[φ^2] = 10^(power_db/10)`.
pub fn phase_noise_track<R: Rng + ?Sized>(len: usize, power_db: f64, bandwidth: f64, rng: &mut R) -> Result<Vec<f64>> {
    if power_db.is_nan() || power_db > PHASE_NOISE_LIMIT_DB {
        return Err(Error::PhaseNoiseTooLarge { power_db, limit_db: PHASE_NOISE_LIMIT_DB });
    }
    if !(bandwidth > 0.0 && bandwidth < 0.5) {
        return Err(invalid("phase-noise bandwidth must lie in (0, 0.5)"));
    }
    let rho = (-2.0 * std::f64::consts::PI * bandwidth).exp();
    let drive = (1.0 - rho * rho).sqrt();
    let scale = (dsp::from_db(power_db) / 2.0).sqrt();
    let mut track = vec![0.0; len];
    for _oscillator in 0..2 {
        let mut phi: f64 = StandardNormal.sample(rng);
        for v in track.iter_mut() {
            *v += scale * phi;
            let w: f64 = StandardNormal.sample(rng);
            phi = rho * phi + drive * w;
        }
    }
    Ok(track)
}

/// Small-angle additive term `j·φ_n·x_n`.
pub fn phase_noise_term(x: &[Complex64], track: &[f64]) -> Vec<Complex64> {
    x.iter().zip(track).map(|(&v, &phi)| Complex64::new(0.0, phi) * v).collect()
}

/// Applies `x_n (1 + j φ_n)` and returns the phase track alongside.
pub fn apply_phase_noise<R: Rng + ?Sized>(
    x: &ComplexSignal,
    power_db: f64,
    bandwidth: f64,
    rng: &mut R,
) -> Result<(ComplexSignal, Vec<f64>)> {
    let track = phase_noise_track(x.len(), power_db, bandwidth, rng)?;
    let term = phase_noise_term(x, &track);
    let out = x.iter().zip(&term).map(|(a, b)| a + b).collect();
    Ok((ComplexSignal::from_parts_unchecked(out, x.oversampling()), track))
}

/// Circular complex Gaussian noise of power `10^(noise_db/10)`.
pub fn awgn<R: Rng + ?Sized>(len: usize, noise_db: f64, rng: &mut R) -> Vec<Complex64> {
    let sigma = dsp::from_db(noise_db).sqrt();
    (0..len).map(|_| complex_gaussian(rng) * sigma).collect()
}

pub fn add_awgn<R: Rng + ?Sized>(x: &ComplexSignal, noise_db: f64, rng: &mut R) -> ComplexSignal {
    let z = awgn(x.len(), noise_db, rng);
    ComplexSignal::from_parts_unchecked(x.iter().zip(&z).map(|(a, b)| a + b).collect(), x.oversampling())
}

/// How the ADC full scale (per I/Q rail) is set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FullScale {
    /// `loading × RMS` of the input block, where RMS is `sqrt(mean |x|^2)`.
    Loading(f64),
    /// Fixed full scale.
    Fixed(f64),
}

impl Default for FullScale {
    fn default() -> Self {
        FullScale::Loading(4.0)
    }
}

/// Uniform mid-rise quantizer applied to I and Q independently.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantizer {
    bits: u32,
    full_scale: FullScale,
}

impl Quantizer {
    pub fn new(bits: u32, full_scale: FullScale) -> Result<Self> {
        if !(4..=16).contains(&bits) {
            return Err(invalid(format!("quantizer bits {bits} outside [4, 16]")));
        }
        match full_scale {
            FullScale::Loading(v) | FullScale::Fixed(v) if !(v > 0.0 && v.is_finite()) => {
                Err(invalid("full scale must be positive"))
            }
            _ => Ok(Self { bits, full_scale }),
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn full_scale_for(&self, x: &[Complex64]) -> f64 {
        match self.full_scale {
            FullScale::Loading(k) => k * dsp::mean_power(x).sqrt(),
            FullScale::Fixed(v) => v,
        }
    }

    pub fn quantize(&self, x: &ComplexSignal) -> ComplexSignal {
        let fs = self.full_scale_for(x);
        self.quantize_at(x, fs)
    }

    pub fn quantize_at(&self, x: &ComplexSignal, full_scale: f64) -> ComplexSignal {
        if full_scale <= 0.0 {
            return x.clone();
        }
        let levels = 1i64 << self.bits;
        let step = 2.0 * full_scale / levels as f64;
        let (lo, hi) = (-(levels / 2), levels / 2 - 1);
        let rail = |v: f64| {
            let i = ((v / step).floor() as i64).clamp(lo, hi);
            (i as f64 + 0.5) * step
        };
        x.map(|v| Complex64::new(rail(v.re), rail(v.im)))
    }

    /// SQNR of an unclipped, busy input under `FullScale::Loading(k)`:
    /// each rail carries half the power, so
    /// `SQNR = 6.02·b + 4.77 − 20·log10(k·√2)` dB.
    pub fn predicted_sqnr_db(bits: u32, loading: f64) -> f64 {
        10.0 * (3.0 * 4f64.powi(bits as i32)).log10() - 20.0 * (loading * std::f64::consts::SQRT_2).log10()
    }
}

/// Quantizes with the given resolution and full-scale policy.
pub fn quantize(x: &ComplexSignal, bits: u32, policy: FullScale) -> Result<ComplexSignal> {
    Ok(Quantizer::new(bits, policy)?.quantize(x))
}
