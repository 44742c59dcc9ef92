//! Joint estimation of the self-interference channel and the TX/RX
//! third-order coefficients from one training symbol.
//!
//! Each outer iteration runs four steps:
//!
//! 1. least-squares channel estimate `Y_k / X_k` on the current
//!    distortion-cleaned training symbol, denoised by keeping only the
//!    first `L` taps of its impulse response;
//! 2. successive (one coefficient at a time) estimation of `α_t` and `α_r`
//!    against the basis signals built from the known transmit block and
//!    the channel estimate;
//! 3. reconstruction of the distortion from the new coefficients;
//! 4. subtraction of that distortion from the received training symbol.
//!
//! The channel estimate of the next iteration is no longer limited by the
//! distortion that was removed, which in turn sharpens the coefficients.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelResponse;
use crate::dsp::{self, ComplexSignal, ResampleDirection};
use crate::error::{invalid, Error, Result};
use crate::impairments::{self, CubicConvention, NonlinearityCoefficients};

/// Training subcarriers with a smaller magnitude make `Y_k / X_k` unusable.
pub const MIN_TRAINING_MAGNITUDE: f64 = 1e-6;

/// Ratio-mode guard, relative to the RMS of the basis column.
pub const RATIO_GUARD: f64 = 1e-6;

/// Basis signals of the linear-in-coefficients distortion model, at the
/// symbol rate: `A = x^3 * ĥ`, `B = (x * ĥ)^3`, `C = (x * ĥ)^2 (x^3 * ĥ)`.
/// They are built at the oversampled rate and decimated.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisSignals {
    pub a: ComplexSignal,
    pub b: ComplexSignal,
    pub c: ComplexSignal,
}

impl BasisSignals {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `α_t·A + α_r·B + cross·C`.
    pub fn combine(&self, coeffs: &NonlinearityCoefficients) -> Vec<Complex64> {
        (0..self.len())
            .map(|n| coeffs.alpha3_tx * self.a[n] + coeffs.alpha3_rx * self.b[n] + coeffs.cross_term * self.c[n])
            .collect()
    }
}

/// Builds the basis from an oversampled CP-stripped transmit block and a
/// channel estimate on `N` subcarriers.
pub fn build_basis(x_i: &ComplexSignal, h_hat: &ChannelResponse, convention: CubicConvention) -> Result<BasisSignals> {
    let factor = x_i.oversampling();
    let p = impairments::products(x_i, h_hat, convention)?;
    let down = |v: Vec<Complex64>| {
        dsp::resample(&ComplexSignal::from_parts_unchecked(v, factor), factor, ResampleDirection::Down)
    };
    Ok(BasisSignals { a: down(p.a)?, b: down(p.b)?, c: down(p.c)? })
}

/// Per-subcarrier least-squares channel estimate `Y_k / X_k`.
pub fn estimate_channel_ls(y: &[Complex64], x: &[Complex64]) -> Result<ChannelResponse> {
    if y.len() != x.len() || y.is_empty() {
        return Err(invalid(format!("received ({}) and training ({}) lengths differ", y.len(), x.len())));
    }
    if let Some(k) = x.iter().position(|v| v.norm() < MIN_TRAINING_MAGNITUDE) {
        return Err(Error::InvalidTraining(format!("subcarrier {k} has magnitude {}", x[k].norm())));
    }
    ChannelResponse::from_bins(y.iter().zip(x).map(|(a, b)| a / b).collect())
}

/// Keeps the first `len` taps of the impulse response behind `h` and zeroes
/// the rest. For a channel confined to `len` taps and white estimation
/// noise this cuts the noise power by `len / N`.
pub fn denoise_cir(h: &ChannelResponse, len: usize) -> Result<ChannelResponse> {
    let n = h.len();
    if len == 0 || len > n {
        return Err(invalid(format!("denoising length {len} outside [1, {n}]")));
    }
    let mut cir = dsp::ifft(h.bins());
    cir[len..].iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    ChannelResponse::from_bins(dsp::fft(&cir))
}

/// Single-coefficient estimator used inside the successive scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientEstimator {
    /// `<A, ȳ> / <A, A>`.
    #[default]
    Projection,
    /// `(1/N) Σ ȳ_n / A_n`.
    Ratio,
}

/// Which coefficient the successive loop estimates first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartCoefficient {
    Tx,
    Rx,
}

/// How the residual that feeds the first coefficient of each inner sweep
/// is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualUpdate {
    /// Remove every term except the one being re-estimated, then fit it
    /// from scratch.
    #[default]
    Literal,
    /// Remove all current terms and fit an increment to the first
    /// coefficient.
    FullResidual,
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn estimate_coefficient(
    y_bar: &[Complex64],
    column: &[Complex64],
    estimator: CoefficientEstimator,
) -> Result<Complex64> {
    if y_bar.len() != column.len() || y_bar.is_empty() {
        return Err(invalid("residual and basis column lengths differ"));
    }
    match estimator {
        CoefficientEstimator::Projection => {
            let energy = inner(column, column).re;
            if energy == 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            Ok(inner(column, y_bar) / energy)
        }
        CoefficientEstimator::Ratio => {
            let guard = RATIO_GUARD * dsp::mean_power(column).sqrt();
            if let Some(n) = column.iter().position(|v| v.norm() <= guard) {
                return Err(Error::NumericalGuard(format!(
                    "basis sample {n} has magnitude {} (guard {guard})",
                    column[n].norm()
                )));
            }
            Ok(y_bar.iter().zip(column).map(|(y, a)| y / a).sum::<Complex64>() / y_bar.len() as f64)
        }
    }
}

fn residual_after(y_bar: &[Complex64], column: &[Complex64], coeff: Complex64) -> Vec<Complex64> {
    y_bar.iter().zip(column).map(|(y, a)| y - coeff * a).collect()
}

/// Fits `A` alone and `B` alone and returns whichever leaves the smaller
/// residual power. Ties go to the transmitter.
pub fn select_start_coefficient(
    y_bar: &[Complex64],
    basis: &BasisSignals,
    estimator: CoefficientEstimator,
) -> Result<StartCoefficient> {
    let alpha_t = estimate_coefficient(y_bar, &basis.a, estimator)?;
    let alpha_r = estimate_coefficient(y_bar, &basis.b, estimator)?;
    let p_t = dsp::mean_power(&residual_after(y_bar, &basis.a, alpha_t));
    let p_r = dsp::mean_power(&residual_after(y_bar, &basis.b, alpha_r));
    Ok(if p_r < p_t { StartCoefficient::Rx } else { StartCoefficient::Tx })
}

/// Options of the successive coefficient estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessiveOptions {
    pub n_inner: usize,
    pub estimator: CoefficientEstimator,
    pub update: ResidualUpdate,
    /// Skip the start-coefficient test and use this one.
    pub forced_start: Option<StartCoefficient>,
}

impl Default for SuccessiveOptions {
    fn default() -> Self {
        Self { n_inner: 3, estimator: CoefficientEstimator::Projection, update: ResidualUpdate::Literal, forced_start: None }
    }
}

/// Successive estimation on a precomputed residual `ȳ = y − x * ĥ`.
///
/// One coefficient is fitted while the other is held at its current value,
/// its term (and the cross term) is removed, then the second coefficient is
/// fitted the same way. The cross coefficient is always `3·α_t·α_r`.
pub fn successive_from_residual(
    y_bar: &[Complex64],
    basis: &BasisSignals,
    options: &SuccessiveOptions,
) -> Result<(NonlinearityCoefficients, StartCoefficient)> {
    if options.n_inner == 0 {
        return Err(invalid("at least one inner iteration is required"));
    }
    if y_bar.len() != basis.len() {
        return Err(invalid("residual and basis lengths differ"));
    }
    let start = match options.forced_start {
        Some(s) => s,
        None => select_start_coefficient(y_bar, basis, options.estimator)?,
    };
    // `first` is the coefficient estimated first in every sweep.
    let (first_col, second_col) = match start {
        StartCoefficient::Tx => (&basis.a, &basis.b),
        StartCoefficient::Rx => (&basis.b, &basis.a),
    };
    let zero = Complex64::new(0.0, 0.0);
    let (mut first, mut second) = (zero, zero);
    let mut work = y_bar.to_vec();
    for _ in 0..options.n_inner {
        first = match options.update {
            ResidualUpdate::Literal => estimate_coefficient(&work, first_col, options.estimator)?,
            ResidualUpdate::FullResidual => {
                let full = residual_after(&work, first_col, first);
                first + estimate_coefficient(&full, first_col, options.estimator)?
            }
        };
        // ȳ = y − x*ĥ − first·col1
        work = residual_after(y_bar, first_col, first);
        second = estimate_coefficient(&work, second_col, options.estimator)?;
        // ȳ = y − x*ĥ − second·col2 − 3·first·second·C
        let cross = 3.0 * first * second;
        work = y_bar.iter().zip(second_col.iter()).zip(basis.c.iter()).map(|((y, s), c)| y - second * s - cross * c).collect();
    }
    let coeffs = match start {
        StartCoefficient::Tx => NonlinearityCoefficients::new(first, second),
        StartCoefficient::Rx => NonlinearityCoefficients::new(second, first),
    };
    Ok((coeffs, start))
}

/// `ȳ = y − x * ĥ` for a CP-stripped symbol-rate block, evaluated as
/// `IDFT(Y_k − X_k Ĥ_k)`.
pub fn linear_residual(y: &[Complex64], x_spectrum: &[Complex64], h_hat: &ChannelResponse) -> Result<Vec<Complex64>> {
    if y.len() != x_spectrum.len() || y.len() != h_hat.len() {
        return Err(invalid("block, spectrum and channel sizes differ"));
    }
    let y_spec = dsp::fft(y);
    let r: Vec<Complex64> =
        y_spec.iter().zip(x_spectrum).zip(h_hat.bins()).map(|((yk, xk), hk)| yk - xk * hk).collect();
    Ok(dsp::ifft(&r))
}

/// Successive coefficient estimation from the raw received training block.
///
/// `y` and `x_i` are CP-stripped; `x_i` must be oversampled (the basis
/// products are built at its rate) and `y` is at the symbol rate.
pub fn estimate_coefficients_successive(
    y: &ComplexSignal,
    x_i: &ComplexSignal,
    h_hat: &ChannelResponse,
    options: &SuccessiveOptions,
    convention: CubicConvention,
) -> Result<(NonlinearityCoefficients, StartCoefficient)> {
    let x_sym = dsp::resample(x_i, x_i.oversampling(), ResampleDirection::Down)?;
    let x_spec = dsp::fft(&x_sym);
    let y_bar = linear_residual(y, &x_spec, h_hat)?;
    let basis = build_basis(x_i, h_hat, convention)?;
    successive_from_residual(&y_bar, &basis, options)
}

/// Result of the stacked least-squares fit `ȳ = W·[α_t, α_r, 3α_tα_r]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LsSolution {
    pub coeffs: NonlinearityCoefficients,
    /// `σ_max / σ_min` of `W`; infinite when `W` is rank deficient.
    pub condition_number: f64,
    pub rank_deficient: bool,
}

/// Minimum-norm least-squares solution of the three-coefficient system via
/// SVD. Used as a reference for the successive estimator.
pub fn ls_oracle_solve(y_bar: &[Complex64], basis: &BasisSignals) -> Result<LsSolution> {
    let rows = basis.len();
    if rows < 3 {
        return Err(invalid("need at least three equations"));
    }
    if y_bar.len() != rows {
        return Err(invalid("residual and basis lengths differ"));
    }
    let w = DMatrix::from_fn(rows, 3, |r, c| match c {
        0 => basis.a[r],
        1 => basis.b[r],
        _ => basis.c[r],
    });
    let svd = w.svd(true, true);
    let sv = &svd.singular_values;
    let s_max = sv.max();
    let s_min = sv.min();
    let tol = rows as f64 * f64::EPSILON * s_max;
    let rank_deficient = s_min <= tol;
    let condition_number = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    let rhs = DVector::from_column_slice(y_bar);
    let x = if s_max == 0.0 {
        DVector::zeros(3)
    } else {
        svd.solve(&rhs, tol).map_err(|e| Error::NumericalGuard(e.to_string()))?
    };
    Ok(LsSolution {
        coeffs: NonlinearityCoefficients::unconstrained(x[0], x[1], x[2]),
        condition_number,
        rank_deficient,
    })
}

/// Settings of the joint iterative estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    pub n_outer: usize,
    pub successive: SuccessiveOptions,
    /// Number of impulse-response taps kept by the denoiser.
    pub denoise_len: usize,
    pub cubic: CubicConvention,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self { n_outer: 4, successive: SuccessiveOptions::default(), denoise_len: 16, cubic: CubicConvention::default() }
    }
}

/// Estimates after one outer iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationSnapshot {
    pub h_hat: ChannelResponse,
    pub coeffs: NonlinearityCoefficients,
    pub start: StartCoefficient,
    /// Power of `y − x * ĥ − d̂` on the training block, dB.
    pub residual_db: f64,
}

/// Outcome of [`joint_iterative_estimate`]. The final estimates are those
/// of the last snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimationReport {
    pub iterations: Vec<IterationSnapshot>,
}

impl EstimationReport {
    fn last(&self) -> &IterationSnapshot {
        self.iterations.last().expect("report holds at least one iteration")
    }

    pub fn h_hat(&self) -> &ChannelResponse {
        &self.last().h_hat
    }

    pub fn coeffs(&self) -> NonlinearityCoefficients {
        self.last().coeffs
    }

    pub fn start_coefficient(&self) -> StartCoefficient {
        self.last().start
    }

    pub fn residual_db(&self) -> Vec<f64> {
        self.iterations.iter().map(|s| s.residual_db).collect()
    }

    pub fn to_record(&self) -> EstimationRecord {
        let c = self.coeffs();
        EstimationRecord {
            h_hat: self.h_hat().bins().iter().map(|v| [v.re, v.im]).collect(),
            alpha3_tx: [c.alpha3_tx.re, c.alpha3_tx.im],
            alpha3_rx: [c.alpha3_rx.re, c.alpha3_rx.im],
            residual_db: self.residual_db().into_iter().map(crate::serde_db::Db).collect(),
            start_coeff: self.start_coefficient(),
        }
    }
}

/// Serialized form of an [`EstimationReport`]. Complex values are `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationRecord {
    pub h_hat: Vec<[f64; 2]>,
    pub alpha3_tx: [f64; 2],
    pub alpha3_rx: [f64; 2],
    pub residual_db: Vec<crate::serde_db::Db>,
    pub start_coeff: StartCoefficient,
}

/// Runs the four-step joint estimator on one training symbol.
///
/// `y_train` is the CP-stripped received block at the symbol rate;
/// `x_train` is the CP-stripped transmitted block, oversampled.
pub fn joint_iterative_estimate(
    y_train: &ComplexSignal,
    x_train: &ComplexSignal,
    config: &EstimationConfig,
) -> Result<EstimationReport> {
    if config.n_outer == 0 {
        return Err(invalid("at least one outer iteration is required"));
    }
    let n = y_train.len();
    if x_train.len() != n * x_train.oversampling() {
        return Err(invalid("training blocks have different lengths"));
    }
    let x_sym = dsp::resample(x_train, x_train.oversampling(), ResampleDirection::Down)?;
    let x_spec = dsp::fft(&x_sym);
    let y_spec = dsp::fft(y_train);

    let mut cleaned = y_spec.clone();
    let mut iterations = Vec::with_capacity(config.n_outer);
    for _ in 0..config.n_outer {
        let h_ls = estimate_channel_ls(&cleaned, &x_spec)?;
        let h_hat = denoise_cir(&h_ls, config.denoise_len)?;

        let y_bar = linear_residual(y_train, &x_spec, &h_hat)?;
        let basis = build_basis(x_train, &h_hat, config.cubic)?;
        let (coeffs, start) = successive_from_residual(&y_bar, &basis, &config.successive)?;

        let d_hat = basis.combine(&coeffs);
        let residual: Vec<Complex64> = y_bar.iter().zip(&d_hat).map(|(a, b)| a - b).collect();
        let d_spec = dsp::fft(&d_hat);
        cleaned = y_spec.iter().zip(&d_spec).map(|(y, d)| y - d).collect();

        iterations.push(IterationSnapshot { h_hat, coeffs, start, residual_db: dsp::power_db(&residual) });
    }
    Ok(EstimationReport { iterations })
}

/// Plain DFT-denoised LS channel estimate with no distortion handling.
pub fn estimate_channel_only(
    y_train: &ComplexSignal,
    x_train_spectrum: &[Complex64],
    denoise_len: usize,
) -> Result<ChannelResponse> {
    let h_ls = estimate_channel_ls(&dsp::fft(y_train), x_train_spectrum)?;
    denoise_cir(&h_ls, denoise_len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_gaussian;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cm_training(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n).map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)).collect()
    }

    #[test]
    fn noiseless_ls_is_exact_and_zero_training_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = cm_training(&mut rng, 64);
        let h: Vec<_> = (0..64).map(|_| complex_gaussian(&mut rng)).collect();
        let y: Vec<_> = x.iter().zip(&h).map(|(a, b)| a * b).collect();
        let est = estimate_channel_ls(&y, &x).unwrap();
        for (a, b) in est.bins().iter().zip(&h) {
            assert!((a - b).norm() < 1e-14);
        }
        let zeros = vec![c(0.0, 0.0); 64];
        assert!(matches!(estimate_channel_ls(&y, &zeros), Err(Error::InvalidTraining(_))));
    }

    #[test]
    fn ls_error_variance_equals_noise_variance_for_unit_modulus_training() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sigma2: f64 = 1e-3;
        let trials = 10_000;
        let h: Vec<_> = (0..64).map(|_| complex_gaussian(&mut rng)).collect();
        let mut acc = 0.0;
        for _ in 0..trials {
            let x = cm_training(&mut rng, 64);
            let y: Vec<_> = x.iter().zip(&h).map(|(a, b)| a * b + complex_gaussian(&mut rng) * sigma2.sqrt()).collect();
            let est = estimate_channel_ls(&y, &x).unwrap();
            acc += est.mse(&ChannelResponse::from_bins(h.clone()).unwrap());
        }
        let mse = acc / trials as f64;
        assert!((mse / sigma2 - 1.0).abs() < 0.1, "{mse}");
    }

    #[test]
    fn denoise_full_length_is_identity_and_range_is_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = ChannelResponse::from_bins((0..64).map(|_| complex_gaussian(&mut rng)).collect()).unwrap();
        let same = denoise_cir(&h, 64).unwrap();
        for (a, b) in same.bins().iter().zip(h.bins()) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(denoise_cir(&h, 0).is_err());
        assert!(denoise_cir(&h, 65).is_err());
    }

    #[test]
    fn denoising_truncates_taps_beyond_the_window() {
        // A tap at index L+2 is outside the kept window and gets removed:
        // the estimator is biased when the channel is longer than L.
        let mut taps = vec![c(0.0, 0.0); 19];
        taps[0] = c(1.0, 0.0);
        taps[18] = c(0.3, 0.0);
        let h = ChannelResponse::from_taps(&taps, 64).unwrap();
        let d = denoise_cir(&h, 16).unwrap();
        let back = d.taps();
        assert!((back[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(back[18].norm() < 1e-12);
        assert!((d.mse(&h) - 0.09).abs() < 1e-12);
    }

    fn random_basis(rng: &mut ChaCha8Rng, n: usize) -> BasisSignals {
        let mut col = || ComplexSignal::symbol_rate((0..n).map(|_| complex_gaussian(rng)).collect()).unwrap();
        BasisSignals { a: col(), b: col(), c: col() }
    }

    #[test]
    fn coefficient_estimators_are_exact_on_rank_one_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let basis = random_basis(&mut rng, 64);
        let alpha = c(-0.003, 0.001);
        let y: Vec<_> = basis.a.iter().map(|v| v * alpha).collect();
        for est in [CoefficientEstimator::Projection, CoefficientEstimator::Ratio] {
            let got = estimate_coefficient(&y, &basis.a, est).unwrap();
            assert!((got - alpha).norm() / alpha.norm() < 1e-12);
        }
    }

    #[test]
    fn projection_recovers_coefficient_at_40db_snr() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let basis = random_basis(&mut rng, 256);
        let alpha = c(0.02, -0.01);
        let sig_p = alpha.norm_sqr() * basis.a.power();
        let y: Vec<_> =
            basis.a.iter().map(|v| v * alpha + complex_gaussian(&mut rng) * (sig_p * 1e-4).sqrt()).collect();
        let got = estimate_coefficient(&y, &basis.a, CoefficientEstimator::Projection).unwrap();
        assert!((got - alpha).norm() / alpha.norm() < 0.01);
    }

    #[test]
    fn projection_of_orthogonal_residual_is_zero() {
        let a = vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        let y = vec![c(0.0, 0.0), c(2.0, 1.0), c(0.0, 0.0), c(-3.0, 0.5)];
        assert_eq!(estimate_coefficient(&y, &a, CoefficientEstimator::Projection).unwrap(), c(0.0, 0.0));
        // The ratio form refuses the zero samples.
        assert!(matches!(estimate_coefficient(&y, &a, CoefficientEstimator::Ratio), Err(Error::NumericalGuard(_))));
    }

    #[test]
    fn start_selection_follows_the_present_nonlinearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let basis = random_basis(&mut rng, 64);
        let tx_only: Vec<_> = basis.a.iter().map(|v| v * 0.01).collect();
        let rx_only: Vec<_> = basis.b.iter().map(|v| v * 0.01).collect();
        let est = CoefficientEstimator::Projection;
        assert_eq!(select_start_coefficient(&tx_only, &basis, est).unwrap(), StartCoefficient::Tx);
        assert_eq!(select_start_coefficient(&rx_only, &basis, est).unwrap(), StartCoefficient::Rx);
        // Equal residuals tie-break to the transmitter.
        let tie = BasisSignals { a: basis.a.clone(), b: basis.a.clone(), c: basis.c.clone() };
        assert_eq!(select_start_coefficient(&tx_only, &tie, est).unwrap(), StartCoefficient::Tx);
    }

    #[test]
    fn residual_update_readings_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let basis = random_basis(&mut rng, 64);
        let truth = NonlinearityCoefficients::new(c(-0.01, 0.002), c(0.004, -0.003));
        let y: Vec<_> = basis
            .combine(&truth)
            .iter()
            .map(|v| v + complex_gaussian(&mut rng) * 1e-4)
            .collect();
        for est in [CoefficientEstimator::Projection, CoefficientEstimator::Ratio] {
            let lit = SuccessiveOptions { n_inner: 5, estimator: est, ..Default::default() };
            let full = SuccessiveOptions { update: ResidualUpdate::FullResidual, ..lit };
            let (a, _) = successive_from_residual(&y, &basis, &lit).unwrap();
            let (b, _) = successive_from_residual(&y, &basis, &full).unwrap();
            assert!((a.alpha3_tx - b.alpha3_tx).norm() < 1e-12);
            assert!((a.alpha3_rx - b.alpha3_rx).norm() < 1e-12);
        }
    }

    #[test]
    fn ls_oracle_exact_and_zero_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let basis = random_basis(&mut rng, 64);
        let truth = NonlinearityCoefficients::unconstrained(c(0.3, -0.1), c(-0.2, 0.05), c(0.01, 0.02));
        let y = basis.combine(&truth);
        let sol = ls_oracle_solve(&y, &basis).unwrap();
        assert!((sol.coeffs.alpha3_tx - truth.alpha3_tx).norm() < 1e-8);
        assert!((sol.coeffs.alpha3_rx - truth.alpha3_rx).norm() < 1e-8);
        assert!((sol.coeffs.cross_term - truth.cross_term).norm() < 1e-8);
        assert!(sol.condition_number < 10.0);
        let zero = ls_oracle_solve(&vec![c(0.0, 0.0); 64], &basis).unwrap();
        assert!(zero.coeffs.is_zero());
    }

    #[test]
    fn ls_oracle_reports_rank_deficiency() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let basis = random_basis(&mut rng, 32);
        let degenerate = BasisSignals { a: basis.a.clone(), b: basis.a.clone(), c: basis.c.clone() };
        let y = degenerate.combine(&NonlinearityCoefficients::new(c(1.0, 0.0), c(1.0, 0.0)));
        let sol = ls_oracle_solve(&y, &degenerate).unwrap();
        assert!(sol.rank_deficient);
        // Minimum-norm solution splits the collinear pair evenly.
        assert!((sol.coeffs.alpha3_tx - sol.coeffs.alpha3_rx).norm() < 1e-8);
    }
}
