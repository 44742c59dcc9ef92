//! LS channel estimation on a constant-modulus training symbol and the
//! gain of truncating the impulse response to the cyclic prefix length.

use fdsic::channel::{generate_channel, PowerDelayProfile};
use fdsic::dsp;
use fdsic::estimation::{denoise_cir, estimate_channel_ls};
use fdsic::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> fdsic::Result<()> {
    let (n, l, trials) = (64usize, 16usize, 2000usize);
    let noise_db = -30.0;
    let sigma = (dsp::from_db(noise_db) / 2.0).sqrt();
    let pdp = PowerDelayProfile::exponential(8, 3.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut mse_ls, mut mse_dn) = (0.0, 0.0);
    for _ in 0..trials {
        let h = generate_channel(30.0, &pdp, &mut rng)?.response(n)?;
        let x: Vec<Complex64> =
            (0..n).map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)).collect();
        let y: Vec<Complex64> = x
            .iter()
            .zip(h.bins())
            .map(|(xk, hk)| {
                let z = Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal));
                xk * hk + z * sigma
            })
            .collect();
        let h_ls = estimate_channel_ls(&y, &x)?;
        let h_dn = denoise_cir(&h_ls, l)?;
        mse_ls += h_ls.mse(&h) / trials as f64;
        mse_dn += h_dn.mse(&h) / trials as f64;
    }
    println!("LS MSE        {:7.2} dB", dsp::to_db(mse_ls));
    println!("denoised MSE  {:7.2} dB", dsp::to_db(mse_dn));
    println!("ratio         {:.4} (L/N = {:.4})", mse_dn / mse_ls, l as f64 / n as f64);
    Ok(())
}
