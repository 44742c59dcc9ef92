//! OFDM framing over a multipath channel: the cyclic prefix turns the
//! channel into a per-subcarrier complex gain.

use fdsic::channel::{apply_channel, generate_channel, PowerDelayProfile};
use fdsic::dsp::{self, demodulate_ofdm, modulate_ofdm, OfdmGeometry, OfdmGrid};
use fdsic::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> fdsic::Result<()> {
    let geometry = OfdmGeometry::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let qpsk = |rng: &mut ChaCha8Rng| {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(if rng.random() { s } else { -s }, if rng.random() { s } else { -s })
    };
    let symbols: Vec<Vec<Complex64>> =
        (0..4).map(|_| (0..geometry.n_subcarriers).map(|_| qpsk(&mut rng)).collect()).collect();
    let tx = OfdmGrid::new(geometry, symbols)?;

    let pdp = PowerDelayProfile::exponential(8, 3.0)?;
    let h = generate_channel(3.0, &pdp, &mut rng)?;
    let time = modulate_ofdm(&tx);
    let received = apply_channel(&time, &h, geometry.cp_len)?;
    let rx = demodulate_ofdm(&received, geometry)?;

    let response = h.response(geometry.n_subcarriers)?;
    let mut worst = 0.0f64;
    for (tx_sym, rx_sym) in tx.symbols().iter().zip(rx.symbols()) {
        for ((x, y), hk) in tx_sym.iter().zip(rx_sym).zip(response.bins()) {
            worst = worst.max((y - x * hk).norm());
        }
    }
    println!("samples per symbol   {}", geometry.symbol_len());
    println!("tx power             {:.4}", tx.power());
    println!("time-domain power    {:.4}", time.power());
    println!("channel energy       {:.4}", h.energy());
    println!("max |Y - X H|        {worst:.2e}");

    let round_trip = dsp::idft(&dsp::dft(tx.symbol(0))?)?;
    let err = round_trip.iter().zip(tx.symbol(0)).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("DFT round-trip error {err:.2e}");
    Ok(())
}
