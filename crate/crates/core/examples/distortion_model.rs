//! Calibrating the cubic coefficients and comparing the three-term
//! distortion model with the full transmitter-channel-receiver cascade.

use fdsic::channel::{generate_channel, PowerDelayProfile};
use fdsic::dsp::{self, resample, ComplexSignal, ResampleDirection};
use fdsic::impairments::{calibrate_alpha3, synthesize_distortion, synthesize_distortion_full, CubicConvention};
use fdsic::{Complex64, NonlinearityCoefficients};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> fdsic::Result<()> {
    let (n, os) = (64usize, 4usize);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spectrum: Vec<Complex64> =
        (0..n).map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)).collect();
    let x = resample(&ComplexSignal::symbol_rate(dsp::idft(&spectrum)?)?, os, ResampleDirection::Up)?;
    let h = generate_channel(30.0, &PowerDelayProfile::exponential(8, 3.0)?, &mut rng)?.response(n)?;

    for conv in [CubicConvention::Literal, CubicConvention::InBand] {
        println!("{conv:?} cube");
        for level in [-40.0, -45.0, -50.0, -60.0] {
            let alpha = calibrate_alpha3(&x, level, conv)?;
            let coeffs = NonlinearityCoefficients::new(alpha, alpha);
            let model = synthesize_distortion(&x, &h, &coeffs, conv)?;
            let full = synthesize_distortion_full(&x, &h, &coeffs, conv)?;
            let neglected: Vec<Complex64> = full.iter().zip(model.iter()).map(|(a, b)| a - b).collect();
            println!(
                "  level {level:5.1} dB  alpha {:+.3e}  model {:7.2} dB  neglected {:7.2} dB",
                alpha.re,
                model.power().log10() * 10.0,
                dsp::power_db(&neglected)
            );
        }
    }
    Ok(())
}
