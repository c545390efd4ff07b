use num_complex::Complex64;
use proptest::prelude::*;
use rectwave::channels::{frequency_response, generate_channel, ChannelSpec};
use rectwave::signals::{
    received_signal, received_signal_cartesian, FrequencyGrid, MultisineWaveform,
};

const M: usize = 2;
const U: usize = 4;

fn grid() -> FrequencyGrid {
    FrequencyGrid::from_cycles(8, 62.5e3, U).unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), M * U).prop_map(|v| {
        v.into_iter()
            .map(|(re, im)| Complex64::new(re, im))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transmit_signal_is_periodic(c in coeffs(), m in 0..M, t in 0.0..1e-4f64) {
        let w = MultisineWaveform::new(grid(), M, c).unwrap();
        let a = w.synthesize_transmit(m, t).unwrap();
        let b = w.synthesize_transmit(m, t + grid().period()).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn received_signal_is_linear(a in coeffs(), b in coeffs(), alpha in -2.0..2.0f64, seed in 0u64..50, t in 0.0..16e-6f64) {
        let h = frequency_response(&generate_channel(&ChannelSpec::nlos(1, M, seed)).unwrap(), &grid());
        let sum: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * alpha + y).collect();
        let wa = MultisineWaveform::new(grid(), M, a).unwrap();
        let wb = MultisineWaveform::new(grid(), M, b).unwrap();
        let ws = MultisineWaveform::new(grid(), M, sum).unwrap();
        let lhs = received_signal(&ws, &h, 0, t).unwrap();
        let rhs = alpha * received_signal(&wa, &h, 0, t).unwrap() + received_signal(&wb, &h, 0, t).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn total_power_is_time_average_power(c in coeffs()) {
        let w = MultisineWaveform::new(grid(), M, c).unwrap();
        let n = 4096;
        let avg: f64 = (0..M)
            .map(|m| {
                let tones = w.transmit_tones(m).unwrap();
                tones.sample(n).iter().map(|v| v * v).sum::<f64>() / n as f64
            })
            .sum();
        prop_assert!((avg - w.total_power()).abs() <= 1e-9 * w.total_power().max(1e-300));
    }

    #[test]
    fn polar_and_cartesian_forms_agree(c in coeffs(), seed in 0u64..50, t in 0.0..16e-6f64) {
        let h = frequency_response(&generate_channel(&ChannelSpec::nlos(2, M, seed)).unwrap(), &grid());
        let w = MultisineWaveform::new(grid(), M, c).unwrap();
        for k in 0..2 {
            let p = received_signal(&w, &h, k, t).unwrap();
            let q = received_signal_cartesian(&w, &h, k, t).unwrap();
            prop_assert!((p - q).abs() <= 1e-12 * p.abs().max(1e-9));
        }
    }
}
