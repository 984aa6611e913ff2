use std::f64::consts::TAU;

use ehsa_core::signals::{
    chirp, multisine, test_signal, ChirpSpec, MultisineSpec, TestSignalKind, TestSignalSpec,
};
use proptest::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};

/// Interpolated zero-crossing times.
fn zero_crossings(x: &[f64], dt: f64) -> Vec<f64> {
    x.windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] * w[1] < 0.0)
        .map(|(i, w)| (i as f64 + w[0] / (w[0] - w[1])) * dt)
        .collect()
}

/// Half-period frequency estimates `(midpoint, f)` between successive crossings.
fn crossing_frequencies(x: &[f64], dt: f64) -> Vec<(f64, f64)> {
    zero_crossings(x, dt)
        .windows(2)
        .map(|w| (0.5 * (w[0] + w[1]), 0.5 / (w[1] - w[0])))
        .collect()
}

fn line_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[test]
fn chirp_sweeps_from_f0_to_f1() {
    let spec = ChirpSpec::for_bandwidth(TAU, 9.0, 50.0, 1e-3).unwrap();
    let x = chirp(&spec).unwrap();
    let est = crossing_frequencies(x.samples(), x.dt());
    assert!(est.windows(2).all(|w| w[1].1 > w[0].1), "frequency not increasing");
    // Estimates near each end, extrapolated to t = 0 and t = T.
    let head: Vec<_> = est.iter().copied().filter(|p| p.0 < 15.0).collect();
    let tail: Vec<_> = est.iter().copied().filter(|p| p.0 > 45.0).collect();
    let (c0, s0) = line_fit(&head);
    let (c1, s1) = line_fit(&tail);
    let f_start = c0;
    let f_end = c1 + s1 * 50.0;
    assert!((f_start / spec.f0 - 1.0).abs() < 0.02, "start {f_start} vs {}", spec.f0);
    assert!((f_end / spec.f1 - 1.0).abs() < 0.02, "end {f_end} vs {}", spec.f1);
    assert!(s0 > 0.0);
}

#[test]
fn multisine_spectrum_has_three_lines() {
    let spec = MultisineSpec::for_bandwidth(TAU, 1.0, 50.0, 0.01).unwrap();
    let x = multisine(&spec).unwrap();
    // Drop the sample at t = T so the record spans exactly 50 s.
    let body = &x.samples()[..x.len() - 1];
    let n = body.len();
    let mut buf: Vec<Complex<f64>> = body.iter().map(|v| Complex::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf[..n / 2].iter().map(|c| c.norm()).collect();
    let top = mag.iter().cloned().fold(0.0, f64::max);
    let peaks: Vec<usize> = (1..mag.len() - 1)
        .filter(|&i| mag[i] > 1e-3 * top && mag[i] >= mag[i - 1] && mag[i] >= mag[i + 1])
        .collect();
    assert_eq!(peaks.len(), 3, "{peaks:?}");
    let bin_hz = 1.0 / (n as f64 * x.dt());
    for (k, w) in peaks.iter().zip(&spec.frequencies) {
        let f = w / TAU;
        assert!((*k as f64 * bin_hz - f).abs() <= bin_hz, "peak at bin {k} for {f} Hz");
    }
}

#[test]
fn multisine_repeats_with_common_period() {
    // Tones 1, 2 and 5 rad/s share the period 2 pi.
    let spec = MultisineSpec {
        amplitude: 1.0,
        frequencies: vec![1.0, 2.0, 5.0],
        duration: 20.0,
        dt: TAU / 1000.0,
    };
    let x = multisine(&spec).unwrap();
    for i in 0..x.len() - 1000 {
        assert!((x.samples()[i] - x.samples()[i + 1000]).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn chirp_bounded_by_amplitude(a in 0.01f64..20.0, f0 in 0.01f64..1.0, span in 0.0f64..3.0, phase in -3.0f64..3.0) {
        let spec = ChirpSpec { amplitude: a, f0, f1: f0 + span, duration: 10.0, dt: 0.01, initial_phase: phase };
        let x = chirp(&spec).unwrap();
        prop_assert!(x.samples().iter().all(|v| v.abs() <= a));
    }

    #[test]
    fn multisine_bounded_by_tone_count(a in 0.01f64..20.0, w in 0.1f64..10.0) {
        let spec = MultisineSpec::for_bandwidth(w, a, 30.0, 0.01).unwrap();
        let x = multisine(&spec).unwrap();
        prop_assert!(x.samples().iter().all(|v| v.abs() <= 3.0 * a * (1.0 + 1e-12)));
    }

    #[test]
    fn test_signals_bounded(a in 0.01f64..20.0, f in 0.05f64..5.0, k in 0usize..5) {
        let kind = TestSignalKind::ALL[k];
        let x = test_signal(&TestSignalSpec::new(kind, a, f, 10.0, 0.01)).unwrap();
        prop_assert!(x.samples().iter().all(|v| v.abs() <= a * (1.0 + 1e-12)));
    }
}
