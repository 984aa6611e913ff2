use ehsa_core::metrics::{best_fit, fpe, mse, rmse, transient_metrics, FitReport};
use ehsa_core::TimeSeries;
use proptest::prelude::*;

/// Unit step response of `wn^2 / (s^2 + 2 zeta wn s + wn^2)`.
fn second_order_step(zeta: f64, wn: f64, t: f64) -> f64 {
    let wd = wn * (1.0 - zeta * zeta).sqrt();
    let phi = zeta.acos();
    1.0 - (-zeta * wn * t).exp() / (1.0 - zeta * zeta).sqrt() * (wd * t + phi).sin()
}

#[test]
fn underdamped_overshoot_matches_analytic_formula() {
    let zeta: f64 = 0.5;
    let s = TimeSeries::from_fn(1e-4, 20.0, |t| second_order_step(zeta, 2.0, t)).unwrap();
    let m = transient_metrics(&s, 1.0).unwrap();
    let expected = 100.0 * (-std::f64::consts::PI * zeta / (1.0 - zeta * zeta).sqrt()).exp();
    assert!((expected - 16.303353482158048).abs() < 1e-12);
    assert!((m.overshoot - expected).abs() < 1e-3, "{} vs {expected}", m.overshoot);
    assert!(m.settling_time > m.rise_time);
}

#[test]
fn first_order_rise_and_settling() {
    // 1 - exp(-t): rise ln 9, settling -ln 0.02.
    let s = TimeSeries::from_fn(1e-4, 15.0, |t| 1.0 - (-t).exp()).unwrap();
    let m = transient_metrics(&s, 1.0).unwrap();
    let last = 1.0 - (-15f64).exp();
    let reach = |f: f64| -(1.0 - f * last).ln();
    let tr = reach(0.9) - reach(0.1);
    assert!((m.rise_time - tr).abs() < 1e-6, "{} vs {tr}", m.rise_time);
    let ts = reach(0.98);
    assert!((m.settling_time - ts).abs() < 1e-6);
    assert_eq!(m.overshoot, 0.0);
}

fn pair(len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(-10.0f64..10.0, len), prop::collection::vec(-1.0f64..1.0, len))
        .prop_map(|(y, noise)| {
            let yh = y.iter().zip(&noise).map(|(a, b)| a + b).collect();
            (y, yh)
        })
}

fn ts(v: Vec<f64>, t0: f64) -> TimeSeries {
    TimeSeries::new(t0, 0.05, v).unwrap()
}

proptest! {
    #[test]
    fn rmse_squared_is_mse((y, yh) in pair(50)) {
        let (y, yh) = (ts(y, 0.0), ts(yh, 0.0));
        let m = mse(&y, &yh).unwrap();
        let r = rmse(&y, &yh).unwrap();
        prop_assert!((r * r - m).abs() <= 1e-12 * m.max(f64::MIN_POSITIVE));
        prop_assert_eq!(fpe(m, 50, 0).unwrap(), m);
        prop_assert_eq!(best_fit(&y, &y).unwrap(), 100.0);
    }

    #[test]
    fn best_fit_ignores_joint_affine_scaling((y, yh) in pair(40), gain in 1e-3f64..1e3, offset in -100.0f64..100.0) {
        let f1 = best_fit(&ts(y.clone(), 0.0), &ts(yh.clone(), 0.0)).unwrap();
        let map = |v: &[f64]| v.iter().map(|x| gain * x + offset).collect::<Vec<_>>();
        let f2 = best_fit(&ts(map(&y), 0.0), &ts(map(&yh), 0.0)).unwrap();
        prop_assert!((f1 - f2).abs() < 1e-10 * f1.abs().max(1.0), "{} vs {}", f1, f2);
    }

    #[test]
    fn fpe_grows_with_parameter_count(m in 1e-9f64..10.0, n in 20usize..2000) {
        let mut prev = fpe(m, n, 0).unwrap();
        for d in 1..10 {
            let next = fpe(m, n, d).unwrap();
            prop_assert!(next > prev);
            prev = next;
        }
    }

    #[test]
    fn time_origin_does_not_matter((y, yh) in pair(30), shift in -1e3f64..1e3) {
        let a = FitReport::compute(&ts(y.clone(), 0.0), &ts(yh.clone(), 0.0), 4).unwrap();
        let b = FitReport::compute(&ts(y, shift), &ts(yh, shift), 4).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn monotone_response_has_no_overshoot(rate in 0.1f64..10.0, level in 0.1f64..100.0) {
        let s = TimeSeries::from_fn(0.01, 60.0 / rate, |t| level * (1.0 - (-rate * t).exp())).unwrap();
        let m = transient_metrics(&s, level).unwrap();
        prop_assert_eq!(m.overshoot, 0.0);
        prop_assert!(m.settling_time >= m.rise_time);
    }
}
