//! Digital cancellation on data symbols and the evaluation metrics:
//! residual interference plus distortion plus noise (RIDN), the per-source
//! noise budget, and Shannon achievable rates.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelResponse;
use crate::dsp::{self, ComplexSignal, OfdmGeometry, OfdmGrid};
use crate::error::{invalid, Result};
use crate::impairments::{self, FullScale, ImpairmentConfig, NonlinearityCoefficients, Quantizer};
use crate::serde_db::Db;
use crate::sim;

/// `Y_k − X_k^I Ĥ_k − D̂_k` on every symbol and subcarrier.
pub fn cancel(y: &OfdmGrid, x_i: &OfdmGrid, h_hat: &ChannelResponse, d_hat: &OfdmGrid) -> Result<OfdmGrid> {
    y.same_shape(x_i)?;
    y.same_shape(d_hat)?;
    if h_hat.len() != y.geometry().n_subcarriers {
        return Err(invalid("channel estimate size does not match the grid"));
    }
    let symbols = y
        .symbols()
        .iter()
        .zip(x_i.symbols())
        .zip(d_hat.symbols())
        .map(|((ys, xs), ds)| {
            ys.iter()
                .zip(xs)
                .zip(ds)
                .zip(h_hat.bins())
                .map(|(((yk, xk), dk), hk)| yk - xk * hk - dk)
                .collect()
        })
        .collect();
    OfdmGrid::new(y.geometry(), symbols)
}

/// Simulator ground truth and receiver estimates for the data symbols of
/// one frame. All grids share one shape.
pub struct RidnInputs<'a> {
    pub x_i: &'a OfdmGrid,
    /// True self-interference channel, including the received SI gain.
    pub h: &'a ChannelResponse,
    pub h_hat: &'a ChannelResponse,
    pub distortion: &'a OfdmGrid,
    pub distortion_hat: &'a OfdmGrid,
    pub phase_noise: &'a OfdmGrid,
    pub quantization: &'a OfdmGrid,
    pub awgn: &'a OfdmGrid,
}

/// Linear RIDN powers, averaged over symbols (and over subcarriers except
/// for `per_subcarrier`). Additive, so trial averages are plain means.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RidnPowers {
    pub interference: f64,
    pub distortion: f64,
    pub phase_noise: f64,
    pub quantization: f64,
    pub awgn: f64,
    pub total: f64,
    pub per_subcarrier: Vec<f64>,
}

impl RidnPowers {
    pub fn zeros(n_subcarriers: usize) -> Self {
        Self { per_subcarrier: vec![0.0; n_subcarriers], ..Default::default() }
    }

    pub fn accumulate(&mut self, other: &RidnPowers, weight: f64) {
        self.interference += weight * other.interference;
        self.distortion += weight * other.distortion;
        self.phase_noise += weight * other.phase_noise;
        self.quantization += weight * other.quantization;
        self.awgn += weight * other.awgn;
        self.total += weight * other.total;
        if self.per_subcarrier.len() != other.per_subcarrier.len() {
            self.per_subcarrier = vec![0.0; other.per_subcarrier.len()];
        }
        for (a, b) in self.per_subcarrier.iter_mut().zip(&other.per_subcarrier) {
            *a += weight * b;
        }
    }

    /// Power sum of the components, which equals `total` when the
    /// components are uncorrelated.
    pub fn component_sum(&self) -> f64 {
        self.interference + self.distortion + self.phase_noise + self.quantization + self.awgn
    }

    pub fn to_report(&self) -> RidnReport {
        RidnReport {
            residual_interference_db: Db(dsp::to_db(self.interference)),
            residual_distortion_db: Db(dsp::to_db(self.distortion)),
            phase_noise_db: Db(dsp::to_db(self.phase_noise)),
            quantization_db: Db(dsp::to_db(self.quantization)),
            awgn_db: Db(dsp::to_db(self.awgn)),
            total_ridn_db: Db(dsp::to_db(self.total)),
            per_subcarrier_ridn: self.per_subcarrier.iter().map(|&p| Db(dsp::to_db(p))).collect(),
        }
    }
}

/// RIDN in dB with attribution to its sources.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RidnReport {
    pub residual_interference_db: Db,
    pub residual_distortion_db: Db,
    pub phase_noise_db: Db,
    pub quantization_db: Db,
    pub awgn_db: Db,
    pub total_ridn_db: Db,
    /// Total RIDN per subcarrier, dB.
    pub per_subcarrier_ridn: Vec<Db>,
}

/// Evaluates `X(H − Ĥ) + (D − D̂) + Φ + Q + Z` term by term.
pub fn compute_ridn(inputs: &RidnInputs<'_>) -> Result<RidnPowers> {
    let grids = [inputs.distortion, inputs.distortion_hat, inputs.phase_noise, inputs.quantization, inputs.awgn];
    for g in grids {
        inputs.x_i.same_shape(g)?;
    }
    let n = inputs.x_i.geometry().n_subcarriers;
    if inputs.h.len() != n || inputs.h_hat.len() != n {
        return Err(invalid("channel sizes do not match the grid"));
    }
    let n_sym = inputs.x_i.n_symbols();
    let mut out = RidnPowers::zeros(n);
    for s in 0..n_sym {
        for k in 0..n {
            let i = inputs.x_i.symbol(s)[k] * (inputs.h.bins()[k] - inputs.h_hat.bins()[k]);
            let d = inputs.distortion.symbol(s)[k] - inputs.distortion_hat.symbol(s)[k];
            let p = inputs.phase_noise.symbol(s)[k];
            let q = inputs.quantization.symbol(s)[k];
            let z = inputs.awgn.symbol(s)[k];
            out.interference += i.norm_sqr();
            out.distortion += d.norm_sqr();
            out.phase_noise += p.norm_sqr();
            out.quantization += q.norm_sqr();
            out.awgn += z.norm_sqr();
            let t = (i + d + p + q + z).norm_sqr();
            out.total += t;
            out.per_subcarrier[k] += t;
        }
    }
    let cells = (n_sym * n) as f64;
    out.interference /= cells;
    out.distortion /= cells;
    out.phase_noise /= cells;
    out.quantization /= cells;
    out.awgn /= cells;
    out.total /= cells;
    out.per_subcarrier.iter_mut().for_each(|p| *p /= n_sym as f64);
    Ok(out)
}

/// Shannon rate of one link direction, `mean_k log2(1 + S_k / RIDN_k)`,
/// treating the residual as Gaussian noise.
pub fn achievable_rate(signal_power: &[f64], ridn_power: &[f64]) -> Result<f64> {
    if signal_power.len() != ridn_power.len() || signal_power.is_empty() {
        return Err(invalid("signal and RIDN vectors differ in length"));
    }
    if ridn_power.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid("RIDN must be positive on every subcarrier"));
    }
    let sum: f64 = signal_power.iter().zip(ridn_power).map(|(s, r)| (1.0 + s / r).log2()).sum();
    Ok(sum / signal_power.len() as f64)
}

/// Half-duplex rate of one direction: the link is active half of the
/// time and limited by receiver noise only.
pub fn half_duplex_rate(signal_power: &[f64], awgn_power: f64) -> Result<f64> {
    let noise = vec![awgn_power; signal_power.len()];
    Ok(0.5 * achievable_rate(signal_power, &noise)?)
}

/// Sum rate over the link directions of a full-duplex pair.
pub fn full_duplex_rate(direction_rates: &[f64]) -> f64 {
    direction_rates.iter().sum()
}

/// One row of the noise budget, all powers in dB relative to unit power.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub si_power_db: Db,
    pub distortion_db: Db,
    pub phase_noise_db: Db,
    pub awgn_db: Db,
    pub quantization_db: Db,
}

/// Power of every impairment at the ADC as the received self-interference
/// power is swept.
///
/// The nonlinearity coefficients are calibrated so that the configured
/// distortion levels hold at `reference_si_db`; at other SI powers the
/// distortion follows the cubic law. Phase noise is configured relative to
/// the SI power and AWGN is absolute. The same random draws are reused at
/// every sweep point.
pub fn noise_budget(
    impairments_cfg: &ImpairmentConfig,
    geometry: OfdmGeometry,
    oversampling: usize,
    reference_si_db: f64,
    si_sweep_db: &[f64],
    seed: u64,
) -> Result<Vec<BudgetRow>> {
    if si_sweep_db.is_empty() {
        return Err(invalid("SI power sweep is empty"));
    }
    impairments_cfg.validate()?;
    let n_symbols = 16;
    let reference = sim::calibrated_coefficients(impairments_cfg, geometry, oversampling)?;
    let impulse = ChannelResponse::from_taps(&[Complex64::new(1.0, 0.0)], geometry.n_subcarriers)?;

    let mut rows = Vec::with_capacity(si_sweep_db.len());
    for &si_db in si_sweep_db {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gain2 = dsp::from_db(si_db);
        let scale = dsp::from_db(si_db - reference_si_db);
        let coeffs = NonlinearityCoefficients::new(reference.alpha3_tx * scale, reference.alpha3_rx * scale);

        let mut linear = Vec::new();
        let mut distortion = Vec::new();
        for _ in 0..n_symbols {
            let spec = sim::qpsk_symbol(&mut rng, geometry.n_subcarriers);
            let x_os = sim::oversampled_block(&spec, oversampling);
            let d = impairments::synthesize_distortion_full(&x_os, &impulse, &coeffs, impairments_cfg.cubic)?;
            linear.extend(dsp::ifft(&spec).into_iter().map(|v| v * gain2.sqrt()));
            distortion.extend(d.iter().map(|v| v * gain2.sqrt()));
        }
        let si: Vec<Complex64> = linear.iter().zip(&distortion).map(|(a, b)| a + b).collect();
        let track = impairments::phase_noise_track(
            si.len(),
            impairments_cfg.phase_noise_db,
            impairments_cfg.phase_noise_bandwidth,
            &mut rng,
        )?;
        let phase = impairments::phase_noise_term(&si, &track);
        let noise = impairments::awgn(si.len(), impairments_cfg.awgn_db, &mut rng);
        let adc_in: Vec<Complex64> =
            si.iter().zip(&phase).zip(&noise).map(|((a, b), c)| a + b + c).collect();
        let quantizer =
            Quantizer::new(impairments_cfg.quantizer_bits, FullScale::Loading(impairments_cfg.quantizer_loading))?;
        let adc_in = ComplexSignal::from_parts_unchecked(adc_in, 1);
        let adc_out = quantizer.quantize(&adc_in);
        let q_err: Vec<Complex64> = adc_out.iter().zip(adc_in.iter()).map(|(a, b)| a - b).collect();

        rows.push(BudgetRow {
            si_power_db: Db(si_db),
            distortion_db: Db(dsp::power_db(&distortion)),
            phase_noise_db: Db(dsp::power_db(&phase)),
            awgn_db: Db(dsp::power_db(&noise)),
            quantization_db: Db(dsp::power_db(&q_err)),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_gaussian;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_grid(rng: &mut ChaCha8Rng, n_sym: usize, scale: f64) -> OfdmGrid {
        let g = OfdmGeometry::default();
        OfdmGrid::new(g, (0..n_sym).map(|_| (0..64).map(|_| complex_gaussian(rng) * scale).collect()).collect())
            .unwrap()
    }

    #[test]
    fn perfect_knowledge_leaves_only_the_signal_of_interest() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x_i = random_grid(&mut rng, 3, 1.0);
        let soi = random_grid(&mut rng, 3, 0.01);
        let d = random_grid(&mut rng, 3, 0.003);
        let h = ChannelResponse::from_bins((0..64).map(|_| complex_gaussian(&mut rng)).collect()).unwrap();
        let y = OfdmGrid::new(
            x_i.geometry(),
            (0..3)
                .map(|s| (0..64).map(|k| x_i.symbol(s)[k] * h.bins()[k] + d.symbol(s)[k] + soi.symbol(s)[k]).collect())
                .collect(),
        )
        .unwrap();
        let out = cancel(&y, &x_i, &h, &d).unwrap();
        for (a, b) in out.symbols().iter().flatten().zip(soi.symbols().iter().flatten()) {
            assert!((a - b).norm() < 1e-14);
        }
        // Without distortion removal the residual floor is the distortion.
        let zeros = OfdmGrid::zeros(x_i.geometry(), 3).unwrap();
        let out = cancel(&y, &x_i, &h, &zeros).unwrap();
        let resid: Vec<_> =
            out.symbols().iter().flatten().zip(soi.symbols().iter().flatten()).map(|(a, b)| a - b).collect();
        assert!((dsp::power_db(&resid) - dsp::to_db(d.power())).abs() < 1e-9);
    }

    #[test]
    fn cancel_passes_through_without_self_interference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y = random_grid(&mut rng, 2, 1.0);
        let zeros = OfdmGrid::zeros(y.geometry(), 2).unwrap();
        let h = ChannelResponse::from_bins(vec![c(0.5, 0.5); 64]).unwrap();
        assert_eq!(cancel(&y, &zeros, &h, &zeros).unwrap(), y);
        let bad = OfdmGrid::zeros(y.geometry(), 3).unwrap();
        assert!(cancel(&y, &bad, &h, &zeros).is_err());
    }

    #[test]
    fn cancel_is_linear_in_the_received_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y1 = random_grid(&mut rng, 2, 1.0);
        let y2 = random_grid(&mut rng, 2, 1.0);
        let x = random_grid(&mut rng, 2, 1.0);
        let d = random_grid(&mut rng, 2, 0.1);
        let zeros = OfdmGrid::zeros(x.geometry(), 2).unwrap();
        let h = ChannelResponse::from_bins((0..64).map(|_| complex_gaussian(&mut rng)).collect()).unwrap();
        let sum = OfdmGrid::new(
            x.geometry(),
            (0..2).map(|s| (0..64).map(|k| y1.symbol(s)[k] + y2.symbol(s)[k]).collect()).collect(),
        )
        .unwrap();
        let lhs = cancel(&sum, &x, &h, &d).unwrap();
        let a = cancel(&y1, &x, &h, &d).unwrap();
        let b = cancel(&y2, &zeros, &h, &zeros).unwrap();
        for s in 0..2 {
            for k in 0..64 {
                assert!((lhs.symbol(s)[k] - a.symbol(s)[k] - b.symbol(s)[k]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn ridn_sentinel_and_single_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_grid(&mut rng, 20, 1.0);
        let zeros = OfdmGrid::zeros(x.geometry(), 20).unwrap();
        let h = ChannelResponse::from_bins((0..64).map(|_| complex_gaussian(&mut rng)).collect()).unwrap();
        let inputs = RidnInputs {
            x_i: &x,
            h: &h,
            h_hat: &h,
            distortion: &zeros,
            distortion_hat: &zeros,
            phase_noise: &zeros,
            quantization: &zeros,
            awgn: &zeros,
        };
        let r = compute_ridn(&inputs).unwrap().to_report();
        assert_eq!(r.total_ridn_db.0, f64::NEG_INFINITY);

        let noise = random_grid(&mut rng, 2000, dsp::from_db(-90.0).sqrt());
        let x = random_grid(&mut rng, 2000, 1.0);
        let zeros = OfdmGrid::zeros(x.geometry(), 2000).unwrap();
        let inputs = RidnInputs { x_i: &x, awgn: &noise, distortion: &zeros, distortion_hat: &zeros, phase_noise: &zeros, quantization: &zeros, ..inputs };
        let r = compute_ridn(&inputs).unwrap();
        assert!((dsp::to_db(r.total) + 90.0).abs() < 0.2);
        assert_eq!(r.total, r.awgn);
    }

    #[test]
    fn rate_limits_and_monotonicity() {
        assert!((achievable_rate(&[1.0; 8], &[1.0; 8]).unwrap() - 1.0).abs() < 1e-15);
        assert!(achievable_rate(&[1.0; 8], &[f64::INFINITY; 8]).unwrap() == 0.0);
        assert!(achievable_rate(&[1.0], &[0.0]).is_err());
        let mut last = f64::INFINITY;
        for r in [1e-3, 1e-2, 1e-1, 1.0, 10.0] {
            let rate = achievable_rate(&[1.0; 4], &[r; 4]).unwrap();
            assert!(rate < last);
            last = rate;
        }
        assert!((half_duplex_rate(&[3.0], 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(full_duplex_rate(&[1.5, 2.5]), 4.0);
    }

    #[test]
    fn noise_budget_rejects_empty_sweep_and_zero_si_is_silent() {
        let cfg = ImpairmentConfig::default();
        let g = OfdmGeometry::default();
        assert!(noise_budget(&cfg, g, 4, 0.0, &[], 1).is_err());
        let rows = noise_budget(&cfg, g, 4, 0.0, &[f64::NEG_INFINITY], 1).unwrap();
        assert_eq!(rows[0].distortion_db.0, f64::NEG_INFINITY);
        assert_eq!(rows[0].phase_noise_db.0, f64::NEG_INFINITY);
        assert!(rows[0].awgn_db.0.is_finite());
    }
}
