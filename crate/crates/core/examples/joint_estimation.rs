//! Joint iterative estimation of the SI channel and both cubic
//! coefficients from one training symbol, and a check of the successive
//! coefficient fit against the stacked least-squares solution.

use fdsic::channel::{generate_channel, PowerDelayProfile};
use fdsic::dsp::{self, resample, ComplexSignal, ResampleDirection};
use fdsic::estimation::{
    build_basis, joint_iterative_estimate, linear_residual, ls_oracle_solve, successive_from_residual,
    EstimationConfig, SuccessiveOptions,
};
use fdsic::impairments::{calibrate_alpha3, synthesize_distortion, CubicConvention};
use fdsic::{Complex64, NonlinearityCoefficients};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> fdsic::Result<()> {
    let (n, os) = (64usize, 4usize);
    let conv = CubicConvention::Literal;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let training: Vec<Complex64> =
        (0..n).map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)).collect();
    let x = resample(&ComplexSignal::symbol_rate(dsp::idft(&training)?)?, os, ResampleDirection::Up)?;
    let h = generate_channel(30.0, &PowerDelayProfile::exponential(8, 3.0)?, &mut rng)?.response(n)?;

    let truth = NonlinearityCoefficients::new(calibrate_alpha3(&x, -40.0, conv)?, calibrate_alpha3(&x, -55.0, conv)?);
    let d = synthesize_distortion(&x, &h, &truth, conv)?;
    let linear: Vec<Complex64> = training.iter().zip(h.bins()).map(|(a, b)| a * b).collect();
    let y: Vec<Complex64> = dsp::idft(&linear)?.iter().zip(d.iter()).map(|(a, b)| a + b).collect();
    let y = ComplexSignal::symbol_rate(y)?;

    let cfg = EstimationConfig { n_outer: 6, ..Default::default() };
    let report = joint_iterative_estimate(&y, &x, &cfg)?;
    println!("true alpha_t {:+.4e}  alpha_r {:+.4e}", truth.alpha3_tx.re, truth.alpha3_rx.re);
    for (i, snap) in report.iterations.iter().enumerate() {
        println!(
            "iter {}  start {:?}  channel MSE {:7.2} dB  alpha_t {:+.4e}  alpha_r {:+.4e}  residual {:7.2} dB",
            i + 1,
            snap.start,
            dsp::to_db(snap.h_hat.mse(&h)),
            snap.coeffs.alpha3_tx.re,
            snap.coeffs.alpha3_rx.re,
            snap.residual_db
        );
    }

    // With the true channel, the successive fit and the LS solution agree.
    let y_bar = linear_residual(&y, &training, &h)?;
    let basis = build_basis(&x, &h, conv)?;
    let opts = SuccessiveOptions { n_inner: 40, ..Default::default() };
    let (successive, _) = successive_from_residual(&y_bar, &basis, &opts)?;
    let ls = ls_oracle_solve(&y_bar, &basis)?;
    println!(
        "successive {:+.6e} {:+.6e}\nLS oracle  {:+.6e} {:+.6e}  (cond {:.1})",
        successive.alpha3_tx.re, successive.alpha3_rx.re, ls.coeffs.alpha3_tx.re, ls.coeffs.alpha3_rx.re, ls.condition_number
    );
    Ok(())
}
