use fdsic::channel::ChannelResponse;
use fdsic::dsp::{self, demodulate_ofdm, modulate_ofdm, resample, ComplexSignal, OfdmGeometry, OfdmGrid, ResampleDirection};
use fdsic::impairments::{apply_cubic, CubicConvention, FullScale, Quantizer};
use fdsic::metrics::{achievable_rate, cancel};
use fdsic::Complex64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn block(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(complex(), n)
}

fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn dft_preserves_energy(x in (1usize..200).prop_flat_map(block)) {
        let spec = dsp::dft(&x).unwrap();
        let ex: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let es: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
        prop_assert!((ex - es).abs() <= 1e-10 * ex.max(1.0));
        prop_assert!(max_err(&dsp::idft(&spec).unwrap(), &x) < 1e-10);
    }

    #[test]
    fn ofdm_round_trip(symbols in prop::collection::vec(block(16), 1..5)) {
        let g = OfdmGeometry::new(16, 4).unwrap();
        let grid = OfdmGrid::new(g, symbols).unwrap();
        let time = modulate_ofdm(&grid);
        prop_assert_eq!(time.len(), grid.n_symbols() * g.symbol_len());
        let back = demodulate_ofdm(&time, g).unwrap();
        for (a, b) in grid.symbols().iter().zip(back.symbols()) {
            prop_assert!(max_err(a, b) < 1e-10);
        }
    }

    #[test]
    fn resample_round_trip(x in block(32), factor in 2usize..6) {
        let s = ComplexSignal::symbol_rate(x.clone()).unwrap();
        let up = resample(&s, factor, ResampleDirection::Up).unwrap();
        prop_assert_eq!(up.oversampling(), factor);
        let down = resample(&up, factor, ResampleDirection::Down).unwrap();
        prop_assert!(max_err(&down, &x) < 1e-10);
    }

    #[test]
    fn cubic_is_odd(x in block(24), a in -0.1..0.0f64) {
        let s = ComplexSignal::new(x.clone(), 4).unwrap();
        let neg = s.map(|v| -v);
        for conv in [CubicConvention::Literal, CubicConvention::InBand] {
            let alpha = Complex64::new(a, 0.0);
            let p = apply_cubic(&s, alpha, conv).unwrap();
            let n = apply_cubic(&neg, alpha, conv).unwrap();
            prop_assert!(p.iter().zip(n.iter()).all(|(u, v)| (u + v).norm() < 1e-14));
        }
    }

    #[test]
    fn quantizer_is_idempotent(x in block(64), bits in 4u32..17) {
        let q = Quantizer::new(bits, FullScale::Fixed(1.0)).unwrap();
        let s = ComplexSignal::symbol_rate(x).unwrap();
        let once = q.quantize(&s);
        prop_assert_eq!(q.quantize(&once), once);
    }

    #[test]
    fn cancel_is_linear_in_y(y1 in block(8), y2 in block(8), x in block(8), h in block(8), d in block(8)) {
        let g = OfdmGeometry::new(8, 2).unwrap();
        let grid = |v: &Vec<Complex64>| OfdmGrid::new(g, vec![v.clone()]).unwrap();
        let h = ChannelResponse::from_bins(h).unwrap();
        let sum: Vec<Complex64> = y1.iter().zip(&y2).map(|(a, b)| a + b).collect();
        let zero = OfdmGrid::zeros(g, 1).unwrap();
        let lhs = cancel(&grid(&sum), &grid(&x), &h, &grid(&d)).unwrap();
        let r1 = cancel(&grid(&y1), &grid(&x), &h, &grid(&d)).unwrap();
        let r2 = cancel(&grid(&y2), &zero, &h, &zero).unwrap();
        let rhs: Vec<Complex64> = r1.symbol(0).iter().zip(r2.symbol(0)).map(|(a, b)| a + b).collect();
        prop_assert!(max_err(lhs.symbol(0), &rhs) < 1e-12);
    }

    #[test]
    fn rate_decreases_with_ridn(s in prop::collection::vec(0.01..10.0f64, 8), r in prop::collection::vec(0.01..10.0f64, 8), k in 0usize..8) {
        let base = achievable_rate(&s, &r).unwrap();
        let mut worse = r.clone();
        worse[k] *= 2.0;
        prop_assert!(achievable_rate(&s, &worse).unwrap() < base);
    }
}
