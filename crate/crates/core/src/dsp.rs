//! Signal-processing primitives shared by the rest of the crate.
//!
//! All transforms use the unitary convention: both the forward and the
//! inverse DFT are scaled by `1/sqrt(N)`, so `sum |x|^2 == sum |X|^2` and
//! power bookkeeping does not depend on which domain a quantity lives in.
//! The one place where this shows up in formulas is the circular
//! convolution theorem, which in this convention reads
//! `DFT(x ⊛ h) = sqrt(N) · DFT(x) · DFT(h)`. Channel frequency responses
//! are therefore kept unnormalized (`H_k = sum_n h_n e^{-j2πkn/N}`), which
//! makes `Y_k = X_k H_k` hold without extra factors.

use std::cell::RefCell;
use std::ops::Deref;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// A block of complex baseband samples together with its oversampling
/// factor relative to the OFDM symbol rate.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<Complex64>,
    oversampling: usize,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, oversampling: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("signal must contain at least one sample"));
        }
        if oversampling == 0 {
            return Err(invalid("oversampling factor must be at least 1"));
        }
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(invalid(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, oversampling })
    }

    /// Signal at the symbol rate (oversampling factor 1).
    pub fn symbol_rate(samples: Vec<Complex64>) -> Result<Self> {
        Self::new(samples, 1)
    }

    pub(crate) fn from_parts_unchecked(samples: Vec<Complex64>, oversampling: usize) -> Self {
        debug_assert!(!samples.is_empty() && oversampling >= 1);
        Self { samples, oversampling }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    /// Mean power `mean |x|^2`.
    pub fn power(&self) -> f64 {
        mean_power(&self.samples)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self::from_parts_unchecked(self.samples.iter().map(|s| s * c).collect(), self.oversampling)
    }

    /// Sample-wise map that keeps the oversampling tag.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_parts_unchecked(self.samples.iter().map(|&s| f(s)).collect(), self.oversampling)
    }
}

impl Deref for ComplexSignal {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.samples
    }
}

pub fn mean_power(x: &[Complex64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|s| s.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Converts a linear power to dB. Zero maps to `-inf`.
pub fn to_db(power: f64) -> f64 {
    10.0 * power.log10()
}

/// Converts dB to linear power. `-inf` maps to zero.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Mean power of `x` in dB relative to unit variance.
///
/// An all-zero signal yields `f64::NEG_INFINITY`, which is used throughout
/// the crate as the "component absent" sentinel.
pub fn power_db(x: &[Complex64]) -> f64 {
    to_db(mean_power(x))
}

/// Fixed-size unitary DFT.
#[derive(Clone)]
pub struct Dft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for Dft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft").field("n", &self.n).finish()
    }
}

impl Dft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("DFT size must be positive"));
        }
        Ok(Self {
            n,
            forward: plan(n, false),
            inverse: plan(n, true),
            scale: 1.0 / (n as f64).sqrt(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(invalid(format!("block length {len} does not match DFT size {}", self.n)));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(x.len())?;
        let mut buf = x.to_vec();
        self.forward.process(&mut buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
        Ok(buf)
    }

    pub fn inverse(&self, spectrum: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(spectrum.len())?;
        let mut buf = spectrum.to_vec();
        self.inverse.process(&mut buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
        Ok(buf)
    }
}

/// Unitary forward DFT over the whole block.
pub fn dft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    Dft::new(x.len())?.forward(x)
}

/// Unitary inverse DFT over the whole block.
pub fn idft(spectrum: &[Complex64]) -> Result<Vec<Complex64>> {
    Dft::new(spectrum.len())?.inverse(spectrum)
}

// Infallible variants for internal use where the length is known to be
// non-zero.
pub(crate) fn fft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    plan(buf.len(), false).process(&mut buf);
    let s = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

pub(crate) fn ifft(spectrum: &[Complex64]) -> Vec<Complex64> {
    let mut buf = spectrum.to_vec();
    plan(buf.len(), true).process(&mut buf);
    let s = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
    buf
}

/// Full linear convolution; output length is `x.len() + taps.len() - 1`.
pub fn convolve(x: &[Complex64], taps: &[Complex64]) -> Result<Vec<Complex64>> {
    if taps.is_empty() {
        return Err(invalid("channel has no taps"));
    }
    if x.is_empty() {
        return Err(invalid("cannot convolve an empty signal"));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); x.len() + taps.len() - 1];
    for (i, &xi) in x.iter().enumerate() {
        for (j, &hj) in taps.iter().enumerate() {
            out[i + j] += xi * hj;
        }
    }
    Ok(out)
}

/// Circular convolution of a block with a frequency response sampled on
/// `N` bins, where the block is `N * factor` samples long.
///
/// The response is treated as that of a tapped delay line whose taps sit at
/// multiples of the symbol period, so on the oversampled grid bin `k` sees
/// `H[k mod N]`.
pub(crate) fn filter_periodic(x: &[Complex64], response: &[Complex64]) -> Vec<Complex64> {
    let n = response.len();
    let mut spec = fft(x);
    for (k, v) in spec.iter_mut().enumerate() {
        *v *= response[k % n];
    }
    ifft(&spec)
}

/// Maps a length-`n` spectrum onto a length-`n * factor` spectrum with the
/// extra bins zeroed. Bins `0..n/2` stay at positive frequencies, the rest
/// (including the Nyquist bin for even `n`) land at negative frequencies.
pub(crate) fn zero_pad_spectrum(spec: &[Complex64], factor: usize) -> Vec<Complex64> {
    let n = spec.len();
    let m = n * factor;
    let half = n.div_ceil(2);
    let gain = (factor as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..half {
        out[k] = spec[k] * gain;
    }
    for k in half..n {
        out[m - n + k] = spec[k] * gain;
    }
    out
}

/// Inverse of [`zero_pad_spectrum`]: keeps the in-band bins and drops the rest.
pub(crate) fn truncate_spectrum(spec: &[Complex64], factor: usize) -> Vec<Complex64> {
    let m = spec.len();
    let n = m / factor;
    let half = n.div_ceil(2);
    let gain = 1.0 / (factor as f64).sqrt();
    let mut out = Vec::with_capacity(n);
    out.extend(spec[..half].iter().map(|v| v * gain));
    out.extend(spec[m - n + half..].iter().map(|v| v * gain));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResampleDirection {
    Up,
    Down,
}

/// Band-limited resampling of a periodic block by an integer factor.
///
/// Up-sampling zero-pads the spectrum (ideal interpolation, the original
/// samples are reproduced at every `factor`-th output sample). Down-sampling
/// keeps only the central `len / factor` bins, i.e. an ideal anti-alias
/// filter followed by decimation.
pub fn resample(x: &ComplexSignal, factor: usize, direction: ResampleDirection) -> Result<ComplexSignal> {
    if factor == 0 {
        return Err(invalid("resampling factor must be at least 1"));
    }
    if factor == 1 {
        return Ok(x.clone());
    }
    match direction {
        ResampleDirection::Up => {
            let spec = zero_pad_spectrum(&fft(x), factor);
            Ok(ComplexSignal::from_parts_unchecked(ifft(&spec), x.oversampling * factor))
        }
        ResampleDirection::Down => {
            if !x.oversampling.is_multiple_of(factor) {
                return Err(invalid(format!(
                    "cannot down-sample by {factor}: oversampling factor is {}",
                    x.oversampling
                )));
            }
            if !x.len().is_multiple_of(factor) {
                return Err(invalid(format!("block length {} not divisible by {factor}", x.len())));
            }
            let spec = truncate_spectrum(&fft(x), factor);
            Ok(ComplexSignal::from_parts_unchecked(ifft(&spec), x.oversampling / factor))
        }
    }
}

/// OFDM symbol geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OfdmGeometry {
    pub n_subcarriers: usize,
    pub cp_len: usize,
}

impl Default for OfdmGeometry {
    fn default() -> Self {
        Self { n_subcarriers: 64, cp_len: 16 }
    }
}

impl OfdmGeometry {
    pub fn new(n_subcarriers: usize, cp_len: usize) -> Result<Self> {
        let g = Self { n_subcarriers, cp_len };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_subcarriers.is_power_of_two() || self.n_subcarriers < 2 {
            return Err(Error::Config(format!(
                "subcarrier count {} must be a power of two",
                self.n_subcarriers
            )));
        }
        if self.cp_len == 0 || self.cp_len >= self.n_subcarriers {
            return Err(Error::Config(format!(
                "cyclic prefix {} must satisfy 0 < cp_len < {}",
                self.cp_len, self.n_subcarriers
            )));
        }
        Ok(())
    }

    /// Samples per OFDM symbol including the cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }
}

/// Frequency-domain content of one or more OFDM symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct OfdmGrid {
    geometry: OfdmGeometry,
    symbols: Vec<Vec<Complex64>>,
}

impl OfdmGrid {
    pub fn new(geometry: OfdmGeometry, symbols: Vec<Vec<Complex64>>) -> Result<Self> {
        geometry.validate()?;
        if symbols.is_empty() {
            return Err(invalid("grid must hold at least one OFDM symbol"));
        }
        if let Some(i) = symbols.iter().position(|s| s.len() != geometry.n_subcarriers) {
            return Err(invalid(format!(
                "symbol {i} has {} subcarriers, expected {}",
                symbols[i].len(),
                geometry.n_subcarriers
            )));
        }
        Ok(Self { geometry, symbols })
    }

    pub fn zeros(geometry: OfdmGeometry, n_symbols: usize) -> Result<Self> {
        Self::new(geometry, vec![vec![Complex64::new(0.0, 0.0); geometry.n_subcarriers]; n_symbols])
    }

    pub fn geometry(&self) -> OfdmGeometry {
        self.geometry
    }

    pub fn n_symbols(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbol(&self, i: usize) -> &[Complex64] {
        &self.symbols[i]
    }

    pub fn symbols(&self) -> &[Vec<Complex64>] {
        &self.symbols
    }

    pub fn into_symbols(self) -> Vec<Vec<Complex64>> {
        self.symbols
    }

    /// Mean per-subcarrier power over the whole grid.
    pub fn power(&self) -> f64 {
        self.symbols.iter().map(|s| mean_power(s)).sum::<f64>() / self.symbols.len() as f64
    }

    pub(crate) fn same_shape(&self, other: &OfdmGrid) -> Result<()> {
        if self.geometry != other.geometry || self.symbols.len() != other.symbols.len() {
            return Err(invalid(format!(
                "grid shapes differ: {}x{} vs {}x{}",
                self.symbols.len(),
                self.geometry.n_subcarriers,
                other.symbols.len(),
                other.geometry.n_subcarriers
            )));
        }
        Ok(())
    }
}

/// IDFT per OFDM symbol and cyclic-prefix insertion.
pub fn modulate_ofdm(grid: &OfdmGrid) -> ComplexSignal {
    let g = grid.geometry;
    let mut out = Vec::with_capacity(g.symbol_len() * grid.n_symbols());
    for sym in &grid.symbols {
        let t = ifft(sym);
        out.extend_from_slice(&t[g.n_subcarriers - g.cp_len..]);
        out.extend_from_slice(&t);
    }
    ComplexSignal::from_parts_unchecked(out, 1)
}

/// Cyclic-prefix removal and DFT per OFDM symbol.
pub fn demodulate_ofdm(x: &[Complex64], geometry: OfdmGeometry) -> Result<OfdmGrid> {
    geometry.validate()?;
    let len = geometry.symbol_len();
    if x.is_empty() || !x.len().is_multiple_of(len) {
        return Err(Error::Framing(format!(
            "{} samples is not a whole number of {len}-sample OFDM symbols",
            x.len()
        )));
    }
    let symbols = x.chunks(len).map(|block| fft(&block[geometry.cp_len..])).collect();
    OfdmGrid::new(geometry, symbols)
}
