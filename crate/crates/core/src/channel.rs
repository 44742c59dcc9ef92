//! Rician tapped-delay-line channels for the self-interference and
//! signal-of-interest paths.
//!
//! Tap 0 carries a fixed line-of-sight component plus a diffuse part whose
//! power ratio is the Rician K-factor; later taps are purely diffuse.
//! Taps sit on the symbol-rate grid, so the same realization can be applied
//! at any integer oversampling factor (see [`ChannelResponse`]).

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp::{self, ComplexSignal};
use crate::error::{invalid, Error, Result};

/// Normalized power-delay profile, one weight per tap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerDelayProfile(Vec<f64>);

impl PowerDelayProfile {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("power-delay profile needs at least one tap"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("power-delay profile weights must be finite and non-negative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("power-delay profile sums to {sum}, expected 1")));
        }
        Ok(Self(weights))
    }

    /// `p_l ∝ exp(-l / decay)`, normalized to unit total power.
    pub fn exponential(n_taps: usize, decay: f64) -> Result<Self> {
        if n_taps == 0 {
            return Err(invalid("channel needs at least one tap"));
        }
        if !(decay > 0.0) {
            return Err(invalid("decay constant must be positive"));
        }
        let raw: Vec<f64> = (0..n_taps).map(|l| (-(l as f64) / decay).exp()).collect();
        let sum: f64 = raw.iter().sum();
        Self::new(raw.into_iter().map(|w| w / sum).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One static channel realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    taps: Vec<Complex64>,
    rician_k_db: f64,
}

impl ChannelRealization {
    pub fn from_taps(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(invalid("channel has no taps"));
        }
        Ok(Self { taps, rician_k_db: f64::INFINITY })
    }

    pub fn impulse() -> Self {
        Self::delayed_impulse(0)
    }

    pub fn delayed_impulse(delay: usize) -> Self {
        let mut taps = vec![Complex64::new(0.0, 0.0); delay + 1];
        taps[delay] = Complex64::new(1.0, 0.0);
        Self { taps, rician_k_db: f64::INFINITY }
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn n_taps(&self) -> usize {
        self.taps.len()
    }

    pub fn rician_k_db(&self) -> f64 {
        self.rician_k_db
    }

    /// Total tap energy `sum |h_n|^2`.
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }

    pub fn response(&self, n_subcarriers: usize) -> Result<ChannelResponse> {
        ChannelResponse::from_taps(&self.taps, n_subcarriers)
    }
}

/// Draws a Rician channel realization.
///
/// `k_factor_db = +inf` gives a deterministic line-of-sight tap 0,
/// `-inf` gives Rayleigh taps. The line-of-sight phase is fixed at zero.
pub fn generate_channel<R: Rng + ?Sized>(
    k_factor_db: f64,
    pdp: &PowerDelayProfile,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if k_factor_db.is_nan() {
        return Err(invalid("K-factor is NaN"));
    }
    let k = dsp::from_db(k_factor_db);
    let (los_frac, diffuse_frac) = if k.is_infinite() { (1.0, 0.0) } else { (k / (k + 1.0), 1.0 / (k + 1.0)) };

    let mut taps = Vec::with_capacity(pdp.len());
    for (l, &p) in pdp.weights().iter().enumerate() {
        // Always draw, so the RNG stream does not depend on the K-factor.
        let g = complex_gaussian(rng);
        let tap = if l == 0 {
            Complex64::new((los_frac * p).sqrt(), 0.0) + g * (diffuse_frac * p).sqrt()
        } else {
            g * p.sqrt()
        };
        taps.push(tap);
    }
    Ok(ChannelRealization { taps, rician_k_db: k_factor_db })
}

/// Unit-variance circular complex Gaussian sample.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Applies `h` by linear convolution and trims the output to the input
/// length. Any transient beyond the input is dropped; with a cyclic prefix
/// at least as long as the channel it never reaches the data window.
pub fn apply_channel(x: &ComplexSignal, h: &ChannelRealization, cp_len: usize) -> Result<ComplexSignal> {
    if h.n_taps() > cp_len {
        return Err(Error::Config(format!(
            "channel has {} taps but the cyclic prefix is only {cp_len} samples",
            h.n_taps()
        )));
    }
    let mut y = dsp::convolve(x, h.taps())?;
    y.truncate(x.len());
    ComplexSignal::new(y, x.oversampling())
}

/// Unnormalized frequency response `H_k = sum_n h_n e^{-j2πkn/N}` on `N`
/// subcarriers. With this scaling `Y_k = X_k H_k` for CP-protected OFDM
/// symbols under the unitary DFT.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelResponse {
    bins: Vec<Complex64>,
}

impl ChannelResponse {
    pub fn from_taps(taps: &[Complex64], n_subcarriers: usize) -> Result<Self> {
        if taps.is_empty() {
            return Err(invalid("channel has no taps"));
        }
        if taps.len() > n_subcarriers {
            return Err(invalid("channel longer than the DFT size"));
        }
        let mut padded = taps.to_vec();
        padded.resize(n_subcarriers, Complex64::new(0.0, 0.0));
        let scale = (n_subcarriers as f64).sqrt();
        let bins = dsp::fft(&padded).into_iter().map(|v| v * scale).collect();
        Ok(Self { bins })
    }

    pub fn from_bins(bins: Vec<Complex64>) -> Result<Self> {
        if bins.is_empty() {
            return Err(invalid("empty channel response"));
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Impulse response on the symbol-rate grid (length `N`).
    pub fn taps(&self) -> Vec<Complex64> {
        let scale = 1.0 / (self.bins.len() as f64).sqrt();
        dsp::ifft(&self.bins).into_iter().map(|v| v * scale).collect()
    }

    /// Circular convolution of a CP-stripped block at any integer
    /// oversampling factor of the symbol rate.
    pub fn filter(&self, x: &ComplexSignal) -> Result<ComplexSignal> {
        if x.len() != self.bins.len() * x.oversampling() {
            return Err(invalid(format!(
                "block of {} samples at oversampling {} does not match {} subcarriers",
                x.len(),
                x.oversampling(),
                self.bins.len()
            )));
        }
        Ok(ComplexSignal::from_parts_unchecked(dsp::filter_periodic(x, &self.bins), x.oversampling()))
    }

    /// Mean squared error against another response, averaged over bins.
    pub fn mse(&self, other: &ChannelResponse) -> f64 {
        self.bins.iter().zip(&other.bins).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / self.bins.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pure_los_single_tap_is_deterministic_unit() {
        let pdp = PowerDelayProfile::exponential(1, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = generate_channel(f64::INFINITY, &pdp, &mut rng).unwrap();
        assert_eq!(h.taps(), &[c(1.0, 0.0)]);
    }

    #[test]
    fn rayleigh_tap_zero_power_matches_profile() {
        let pdp = PowerDelayProfile::exponential(4, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let h = generate_channel(f64::NEG_INFINITY, &pdp, &mut rng).unwrap();
            acc += h.taps()[0].norm_sqr();
        }
        let mean = acc / draws as f64;
        let want = pdp.weights()[0];
        assert!((mean / want - 1.0).abs() < 0.02, "{mean} vs {want}");
    }

    #[test]
    fn empirical_k_factor_matches_30db() {
        let pdp = PowerDelayProfile::exponential(4, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 10_000;
        let taps0: Vec<Complex64> =
            (0..draws).map(|_| generate_channel(30.0, &pdp, &mut rng).unwrap().taps()[0]).collect();
        let mean = taps0.iter().sum::<Complex64>() / draws as f64;
        let diffuse = taps0.iter().map(|t| (t - mean).norm_sqr()).sum::<f64>() / draws as f64;
        let k_db = 10.0 * (mean.norm_sqr() / diffuse).log10();
        assert!((k_db - 30.0).abs() < 0.5, "K = {k_db} dB");
    }

    #[test]
    fn mean_energy_is_normalized() {
        let pdp = PowerDelayProfile::exponential(8, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws = 10_000;
        let e: f64 =
            (0..draws).map(|_| generate_channel(3.0, &pdp, &mut rng).unwrap().energy()).sum::<f64>() / draws as f64;
        assert!((e - 1.0).abs() < 0.01, "E = {e}");
    }

    #[test]
    fn seeded_generation_is_bit_exact() {
        let pdp = PowerDelayProfile::exponential(8, 3.0).unwrap();
        let a = generate_channel(30.0, &pdp, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = generate_channel(30.0, &pdp, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        assert!(PowerDelayProfile::new(vec![0.5, 0.2]).is_err());
        assert!(PowerDelayProfile::new(vec![1.5, -0.5]).is_err());
        assert!(PowerDelayProfile::new(vec![]).is_err());
        assert!(PowerDelayProfile::exponential(0, 3.0).is_err());
    }

    #[test]
    fn apply_channel_identity_shift_and_cp_check() {
        let x = ComplexSignal::symbol_rate((0..20).map(|i| c(i as f64, -(i as f64))).collect()).unwrap();
        let y = apply_channel(&x, &ChannelRealization::impulse(), 16).unwrap();
        assert_eq!(y, x);
        let y = apply_channel(&x, &ChannelRealization::delayed_impulse(3), 16).unwrap();
        assert_eq!(&y[3..], &x[..17]);
        let long = ChannelRealization::from_taps(vec![c(1.0, 0.0); 17]).unwrap();
        assert!(matches!(apply_channel(&x, &long, 16), Err(Error::Config(_))));
    }

    #[test]
    fn response_round_trips_taps() {
        let taps = vec![c(0.9, 0.1), c(-0.2, 0.3), c(0.05, -0.1)];
        let r = ChannelResponse::from_taps(&taps, 64).unwrap();
        let back = r.taps();
        for (i, t) in back.iter().enumerate() {
            let want = taps.get(i).copied().unwrap_or_default();
            assert!((t - want).norm() < 1e-12);
        }
    }

    #[test]
    fn oversampled_filter_places_taps_on_symbol_grid() {
        // A one-sample delay at the symbol rate is a four-sample delay at 4x.
        let r = ChannelResponse::from_taps(&[c(0.0, 0.0), c(1.0, 0.0)], 16).unwrap();
        let x: Vec<_> = (0..64).map(|i| c((i as f64 * 0.3).sin(), (i as f64 * 0.7).cos())).collect();
        let y = r.filter(&ComplexSignal::new(x.clone(), 4).unwrap()).unwrap();
        for i in 0..64 {
            assert!((y[(i + 4) % 64] - x[i]).norm() < 1e-12);
        }
    }
}
