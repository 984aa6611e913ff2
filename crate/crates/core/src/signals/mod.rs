//! Excitation signals for identification and test/reference signals for
//! validation and control.
//!
//! Frequencies of the identification signals are tied to the actuator
//! bandwidth `w_bw`: the chirp sweeps `0.1 w_bw ..= 2 w_bw` and the multisine
//! uses the three tones `0.1 w_bw`, `0.5 w_bw` and `2 w_bw`.
//!
//! The chirp is a linear frequency sweep, `x(t) = A cos(phi0 + 2 pi (k/2 t^2 + f0 t))`
//! with `k = (f1 - f0) / T`. Every multisine tone has amplitude `A`, so a
//! three-tone signal peaks at up to `3 A`.

mod registry;

pub use registry::{SignalGenerator, SignalParams, SignalRegistry};

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{sample_count, TimeSeries};

/// Default excitation amplitude, just inside the +/-10 V valve input range.
pub const DEFAULT_AMPLITUDE: f64 = 9.0;

/// `(0.1 w_bw, 2 w_bw)` in rad/s.
pub fn excitation_band(omega_bw: f64) -> Result<(f64, f64)> {
    check_bandwidth(omega_bw)?;
    Ok((0.1 * omega_bw, 2.0 * omega_bw))
}

/// The three multisine tones `[0.1, 0.5, 2] * w_bw` in rad/s.
pub fn multisine_frequencies(omega_bw: f64) -> Result<Vec<f64>> {
    check_bandwidth(omega_bw)?;
    Ok(vec![0.1 * omega_bw, 0.5 * omega_bw, 2.0 * omega_bw])
}

fn check_bandwidth(omega_bw: f64) -> Result<()> {
    if omega_bw.is_finite() && omega_bw > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("bandwidth must be positive, got {omega_bw}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChirpSpec {
    pub amplitude: f64,
    /// Start frequency, Hz.
    pub f0: f64,
    /// End frequency, Hz.
    pub f1: f64,
    pub duration: f64,
    pub dt: f64,
    pub initial_phase: f64,
}

impl ChirpSpec {
    /// Sweep covering the excitation band of `omega_bw`.
    pub fn for_bandwidth(omega_bw: f64, amplitude: f64, duration: f64, dt: f64) -> Result<Self> {
        let (lo, hi) = excitation_band(omega_bw)?;
        Ok(Self {
            amplitude,
            f0: lo / TAU,
            f1: hi / TAU,
            duration,
            dt,
            initial_phase: 0.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        positive("amplitude", self.amplitude)?;
        positive("f0", self.f0)?;
        positive("duration", self.duration)?;
        positive("dt", self.dt)?;
        if !(self.f1 >= self.f0 && self.f1.is_finite()) {
            return Err(Error::Config(format!(
                "chirp needs f1 >= f0 (got f0={}, f1={})",
                self.f0, self.f1
            )));
        }
        if !self.initial_phase.is_finite() {
            return Err(Error::Config("initial phase must be finite".into()));
        }
        let nyquist_dt = 1.0 / (2.0 * self.f1);
        if self.dt > nyquist_dt {
            return Err(Error::Config(format!(
                "chirp end frequency {} Hz needs dt <= {nyquist_dt} s, got {}",
                self.f1, self.dt
            )));
        }
        Ok(())
    }

    /// Sweep rate `k = (f1 - f0) / T` in Hz/s.
    pub fn sweep_rate(&self) -> f64 {
        (self.f1 - self.f0) / self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultisineSpec {
    pub amplitude: f64,
    /// Tone frequencies, rad/s.
    pub frequencies: Vec<f64>,
    pub duration: f64,
    pub dt: f64,
}

impl MultisineSpec {
    /// The three bandwidth-relative tones.
    pub fn for_bandwidth(omega_bw: f64, amplitude: f64, duration: f64, dt: f64) -> Result<Self> {
        Ok(Self {
            amplitude,
            frequencies: multisine_frequencies(omega_bw)?,
            duration,
            dt,
        })
    }

    pub fn validate(&self) -> Result<()> {
        positive("amplitude", self.amplitude)?;
        positive("duration", self.duration)?;
        positive("dt", self.dt)?;
        if self.frequencies.is_empty() {
            return Err(Error::Config("multisine needs at least one frequency".into()));
        }
        for (i, w) in self.frequencies.iter().enumerate() {
            positive("multisine frequency", *w)?;
            if self.frequencies[..i].contains(w) {
                return Err(Error::Config(format!("duplicate multisine frequency {w}")));
            }
        }
        let w_max = self.frequencies.iter().cloned().fold(0.0, f64::max);
        if self.dt > PI / w_max {
            return Err(Error::Config(format!(
                "multisine tone {w_max} rad/s needs dt <= {} s, got {}",
                PI / w_max,
                self.dt
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestSignalKind {
    Step,
    Sine,
    Square,
    Triangular,
    Sawtooth,
    Staircase,
}

impl TestSignalKind {
    pub const ALL: [TestSignalKind; 6] = [
        Self::Step,
        Self::Sine,
        Self::Square,
        Self::Triangular,
        Self::Sawtooth,
        Self::Staircase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Step => "step",
            Self::Sine => "sine",
            Self::Square => "square",
            Self::Triangular => "triangular",
            Self::Sawtooth => "sawtooth",
            Self::Staircase => "staircase",
        }
    }
}

/// One hold segment of a staircase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StairStep {
    pub hold: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSignalSpec {
    pub kind: TestSignalKind,
    pub amplitude: f64,
    /// Hz; ignored by step and staircase.
    pub frequency: f64,
    pub duration: f64,
    pub dt: f64,
    pub staircase_levels: Vec<StairStep>,
}

impl TestSignalSpec {
    pub fn new(kind: TestSignalKind, amplitude: f64, frequency: f64, duration: f64, dt: f64) -> Self {
        Self {
            kind,
            amplitude,
            frequency,
            duration,
            dt,
            staircase_levels: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("amplitude", self.amplitude)?;
        positive("duration", self.duration)?;
        positive("dt", self.dt)?;
        match self.kind {
            TestSignalKind::Step => {}
            TestSignalKind::Staircase => {
                if self.staircase_levels.is_empty() {
                    return Err(Error::Config("staircase needs at least one level".into()));
                }
                for s in &self.staircase_levels {
                    positive("staircase hold", s.hold)?;
                    if !s.level.is_finite() {
                        return Err(Error::Config("staircase level must be finite".into()));
                    }
                }
            }
            _ => positive("frequency", self.frequency)?,
        }
        Ok(())
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be positive, got {v}")))
    }
}

/// Linear-sweep chirp sampled at `0, dt, ..., <= T`.
pub fn chirp(spec: &ChirpSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let k = spec.sweep_rate();
    TimeSeries::from_fn(spec.dt, spec.duration, |t| {
        spec.amplitude * (spec.initial_phase + TAU * (0.5 * k * t * t + spec.f0 * t)).cos()
    })
}

/// Sum of unit-amplitude sines at the spec's tones, scaled by `A`.
pub fn multisine(spec: &MultisineSpec) -> Result<TimeSeries> {
    spec.validate()?;
    TimeSeries::from_fn(spec.dt, spec.duration, |t| {
        spec.amplitude * spec.frequencies.iter().map(|w| (w * t).sin()).sum::<f64>()
    })
}

/// Periodic and piecewise test waveforms.
///
/// Phase-based waveforms start at the beginning of a period: square starts
/// at `+A`, triangular rises from 0, sawtooth ramps from `-A` to `+A`.
pub fn test_signal(spec: &TestSignalSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let a = spec.amplitude;
    let f = spec.frequency;
    let n = sample_count(spec.dt, spec.duration)?;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 * spec.dt;
            match spec.kind {
                TestSignalKind::Step => a,
                TestSignalKind::Sine => a * (TAU * f * t).sin(),
                TestSignalKind::Square => {
                    if cycle_fraction(f * t) < 0.5 {
                        a
                    } else {
                        -a
                    }
                }
                TestSignalKind::Triangular => {
                    let p = cycle_fraction(f * t);
                    a * if p < 0.25 {
                        4.0 * p
                    } else if p < 0.75 {
                        2.0 - 4.0 * p
                    } else {
                        4.0 * p - 4.0
                    }
                }
                TestSignalKind::Sawtooth => a * (2.0 * cycle_fraction(f * t) - 1.0),
                TestSignalKind::Staircase => staircase_level(&spec.staircase_levels, t),
            }
        })
        .collect();
    TimeSeries::new(0.0, spec.dt, samples)
}

/// Position within the current period in `[0, 1)`, snapped to 1e-9 so that
/// sample times landing on period boundaries are not split by rounding.
fn cycle_fraction(cycles: f64) -> f64 {
    let snapped = (cycles * 1e9).round() / 1e9;
    snapped - snapped.floor()
}

fn staircase_level(levels: &[StairStep], t: f64) -> f64 {
    let mut end = 0.0;
    for s in levels {
        end += s.hold;
        if t < end - 1e-12 {
            return s.level;
        }
    }
    levels.last().map(|s| s.level).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn band_rule() {
        let (lo, hi) = excitation_band(10.0).unwrap();
        assert_relative_eq!(lo, 1.0, max_relative = 1e-15);
        assert_relative_eq!(hi, 20.0, max_relative = 1e-15);
        let (lo, hi) = excitation_band(1.0).unwrap();
        assert_eq!((lo, hi), (0.1, 2.0));
        for w in [0.3, 7.0, 123.0] {
            let (lo, hi) = excitation_band(w).unwrap();
            assert_relative_eq!(hi / lo, 20.0, max_relative = 1e-12);
        }
        assert!(excitation_band(0.0).is_err());
        assert!(excitation_band(-1.0).is_err());
    }

    #[test]
    fn multisine_tones() {
        let f = multisine_frequencies(10.0).unwrap();
        assert_relative_eq!(f[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(f[1], 5.0, max_relative = 1e-15);
        assert_relative_eq!(f[2], 20.0, max_relative = 1e-15);
        assert!(f.windows(2).all(|w| w[0] < w[1]));
        assert!(multisine_frequencies(f64::NAN).is_err());
    }

    #[test]
    fn chirp_starts_at_amplitude() {
        let spec = ChirpSpec {
            amplitude: 2.5,
            f0: 0.1,
            f1: 2.0,
            duration: 10.0,
            dt: 0.01,
            initial_phase: 0.0,
        };
        let x = chirp(&spec).unwrap();
        assert_eq!(x.samples()[0], 2.5);
        assert_eq!(x.len(), 1001);
        assert!(x.samples().iter().all(|v| v.abs() <= 2.5));
    }

    #[test]
    fn chirp_rejects_nyquist_violation() {
        let spec = ChirpSpec {
            amplitude: 1.0,
            f0: 1.0,
            f1: 20.0,
            duration: 1.0,
            dt: 0.05,
            initial_phase: 0.0,
        };
        assert!(matches!(chirp(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn multisine_starts_at_zero_and_is_bounded() {
        let spec = MultisineSpec::for_bandwidth(2.0, 1.5, 20.0, 0.01).unwrap();
        let x = multisine(&spec).unwrap();
        assert_eq!(x.samples()[0], 0.0);
        assert!(x.samples().iter().all(|v| v.abs() <= 4.5));
    }

    #[test]
    fn single_tone_multisine_is_a_sine() {
        let spec = MultisineSpec {
            amplitude: 2.0,
            frequencies: vec![3.0],
            duration: 5.0,
            dt: 0.01,
        };
        let x = multisine(&spec).unwrap();
        for (t, v) in x.times().zip(x.samples()) {
            assert_relative_eq!(*v, 2.0 * (3.0 * t).sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn multisine_rejects_bad_tones() {
        let mut spec = MultisineSpec {
            amplitude: 1.0,
            frequencies: vec![1.0, 1.0],
            duration: 1.0,
            dt: 0.01,
        };
        assert!(multisine(&spec).is_err());
        spec.frequencies = vec![1.0, 400.0];
        assert!(multisine(&spec).is_err());
    }

    #[test]
    fn step_is_constant_after_origin() {
        let s = test_signal(&TestSignalSpec::new(TestSignalKind::Step, 1.0, 0.0, 2.0, 0.1)).unwrap();
        assert!(s.samples()[1..].iter().all(|v| *v == 1.0));
    }

    #[test]
    fn square_blocks_of_four() {
        let f = 0.5;
        let s = test_signal(&TestSignalSpec::new(TestSignalKind::Square, 2.0, f, 8.0, 1.0 / (8.0 * f)))
            .unwrap();
        for (i, v) in s.samples().iter().enumerate() {
            let expected = if (i / 4) % 2 == 0 { 2.0 } else { -2.0 };
            assert_eq!(*v, expected, "sample {i}");
        }
    }

    #[test]
    fn triangular_has_zero_mean_over_periods() {
        let s = test_signal(&TestSignalSpec::new(TestSignalKind::Triangular, 3.0, 0.25, 20.0, 0.01))
            .unwrap();
        // 5 full periods: drop the closing sample at t = T.
        let body = &s.samples()[..s.len() - 1];
        let mean = body.iter().sum::<f64>() / body.len() as f64;
        assert!(mean.abs() < 1e-12, "mean {mean}");
        assert!(s.samples().iter().all(|v| v.abs() <= 3.0 + 1e-12));
    }

    #[test]
    fn sawtooth_ramps_each_period() {
        let s = test_signal(&TestSignalSpec::new(TestSignalKind::Sawtooth, 1.0, 1.0, 2.0, 0.25)).unwrap();
        assert_eq!(s.samples(), &[-1.0, -0.5, 0.0, 0.5, -1.0, -0.5, 0.0, 0.5, -1.0]);
    }

    #[test]
    fn staircase_holds_levels() {
        let mut spec = TestSignalSpec::new(TestSignalKind::Staircase, 1.0, 0.0, 3.0, 0.5);
        assert!(test_signal(&spec).is_err());
        spec.staircase_levels = vec![
            StairStep { hold: 1.0, level: 0.2 },
            StairStep { hold: 1.0, level: 0.6 },
        ];
        let s = test_signal(&spec).unwrap();
        assert_eq!(s.samples(), &[0.2, 0.2, 0.6, 0.6, 0.6, 0.6, 0.6]);
    }
}
