use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{
    chirp, multisine, test_signal, ChirpSpec, MultisineSpec, StairStep, TestSignalKind,
    TestSignalSpec, DEFAULT_AMPLITUDE,
};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Loosely typed signal description, as found in an experiment config.
///
/// Each generator reads the fields it needs and rejects descriptions that
/// lack them. Frequencies derived from `bandwidth` are multiplied by
/// `band_scale`, which lets an experiment move the whole band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalParams {
    pub kind: String,
    /// Peak amplitude; per tone for a multisine.
    #[serde(default)]
    pub amplitude: Option<f64>,
    pub duration: f64,
    pub dt: f64,
    /// Actuator bandwidth, rad/s.
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default)]
    pub band_scale: Option<f64>,
    /// Explicit chirp start/end frequencies, Hz.
    #[serde(default)]
    pub f0: Option<f64>,
    #[serde(default)]
    pub f1: Option<f64>,
    #[serde(default)]
    pub initial_phase: Option<f64>,
    /// Explicit multisine tones, rad/s.
    #[serde(default)]
    pub frequencies: Option<Vec<f64>>,
    /// Test-signal frequency, Hz.
    #[serde(default)]
    pub frequency: Option<f64>,
    /// Staircase `[hold s, level]` pairs.
    #[serde(default)]
    pub levels: Option<Vec<[f64; 2]>>,
}

impl SignalParams {
    pub fn new(kind: &str, duration: f64, dt: f64) -> Self {
        Self {
            kind: kind.to_string(),
            amplitude: None,
            duration,
            dt,
            bandwidth: None,
            band_scale: None,
            f0: None,
            f1: None,
            initial_phase: None,
            frequencies: None,
            frequency: None,
            levels: None,
        }
    }

    pub fn amplitude_or_default(&self) -> f64 {
        self.amplitude.unwrap_or(DEFAULT_AMPLITUDE)
    }

    /// Per-tone amplitude; by default the tones share [`DEFAULT_AMPLITUDE`]
    /// so that their sum stays inside the input range.
    fn multisine_amplitude(&self, tones: usize) -> f64 {
        self.amplitude.unwrap_or(DEFAULT_AMPLITUDE / tones.max(1) as f64)
    }

    fn scaled_bandwidth(&self) -> Option<f64> {
        self.bandwidth.map(|w| w * self.band_scale.unwrap_or(1.0))
    }

    fn require<T: Copy>(&self, field: Option<T>, name: &str) -> Result<T> {
        field.ok_or_else(|| Error::Config(format!("`{}` signal needs `{name}`", self.kind)))
    }
}

/// A named way of turning [`SignalParams`] into samples.
pub trait SignalGenerator: Send + Sync {
    fn name(&self) -> &'static str;

    fn generate(&self, params: &SignalParams) -> Result<TimeSeries>;
}

struct Chirp;

impl SignalGenerator for Chirp {
    fn name(&self) -> &'static str {
        "chirp"
    }

    fn generate(&self, p: &SignalParams) -> Result<TimeSeries> {
        let mut spec = match (p.f0, p.f1, p.scaled_bandwidth()) {
            (Some(f0), Some(f1), _) => ChirpSpec {
                amplitude: p.amplitude_or_default(),
                f0,
                f1,
                duration: p.duration,
                dt: p.dt,
                initial_phase: 0.0,
            },
            (None, None, Some(w)) => {
                ChirpSpec::for_bandwidth(w, p.amplitude_or_default(), p.duration, p.dt)?
            }
            _ => {
                return Err(Error::Config(
                    "chirp needs either `bandwidth` or both `f0` and `f1`".into(),
                ))
            }
        };
        spec.initial_phase = p.initial_phase.unwrap_or(0.0);
        chirp(&spec)
    }
}

struct Multisine;

impl SignalGenerator for Multisine {
    fn name(&self) -> &'static str {
        "multisine"
    }

    fn generate(&self, p: &SignalParams) -> Result<TimeSeries> {
        let spec = match (&p.frequencies, p.scaled_bandwidth()) {
            (Some(freqs), _) => MultisineSpec {
                amplitude: p.multisine_amplitude(freqs.len()),
                frequencies: freqs.clone(),
                duration: p.duration,
                dt: p.dt,
            },
            (None, Some(w)) => {
                let mut spec = MultisineSpec::for_bandwidth(w, 1.0, p.duration, p.dt)?;
                spec.amplitude = p.multisine_amplitude(spec.frequencies.len());
                spec
            }
            (None, None) => {
                return Err(Error::Config(
                    "multisine needs either `bandwidth` or `frequencies`".into(),
                ))
            }
        };
        multisine(&spec)
    }
}

struct Test(TestSignalKind);

impl SignalGenerator for Test {
    fn name(&self) -> &'static str {
        self.0.name()
    }

    fn generate(&self, p: &SignalParams) -> Result<TimeSeries> {
        let frequency = match self.0 {
            TestSignalKind::Step | TestSignalKind::Staircase => 0.0,
            _ => match (p.frequency, p.scaled_bandwidth()) {
                (Some(f), _) => f,
                (None, Some(w)) => w / TAU,
                (None, None) => p.require(p.frequency, "frequency")?,
            },
        };
        let mut spec =
            TestSignalSpec::new(self.0, p.amplitude_or_default(), frequency, p.duration, p.dt);
        if self.0 == TestSignalKind::Staircase {
            spec.staircase_levels = p
                .levels
                .as_ref()
                .map(|l| l.iter().map(|[hold, level]| StairStep { hold: *hold, level: *level }).collect())
                .unwrap_or_default();
        }
        test_signal(&spec)
    }
}

/// Identically zero input, for equilibrium checks.
struct Zero;

impl SignalGenerator for Zero {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn generate(&self, p: &SignalParams) -> Result<TimeSeries> {
        TimeSeries::from_fn(p.dt, p.duration, |_| 0.0)
    }
}

/// Signal generators keyed by name.
pub struct SignalRegistry {
    generators: BTreeMap<&'static str, Box<dyn SignalGenerator>>,
}

impl SignalRegistry {
    pub fn empty() -> Self {
        Self {
            generators: BTreeMap::new(),
        }
    }

    /// Registry holding `chirp`, `multisine`, `zero` and every test waveform.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Chirp));
        r.register(Box::new(Multisine));
        r.register(Box::new(Zero));
        for kind in TestSignalKind::ALL {
            r.register(Box::new(Test(kind)));
        }
        r
    }

    /// Adds a generator, replacing any previous one of the same name.
    pub fn register(&mut self, generator: Box<dyn SignalGenerator>) {
        self.generators.insert(generator.name(), generator);
    }

    pub fn get(&self, name: &str) -> Option<&dyn SignalGenerator> {
        self.generators.get(name).map(|g| g.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.generators.keys().copied()
    }

    /// Looks up `params.kind` and generates the signal.
    pub fn generate(&self, params: &SignalParams) -> Result<TimeSeries> {
        let generator = self.get(&params.kind).ok_or_else(|| {
            Error::Config(format!(
                "unknown signal kind `{}` (available: {})",
                params.kind,
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        generator.generate(params)
    }
}

impl Default for SignalRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names() {
        let names: Vec<_> = SignalRegistry::builtin().names().collect();
        assert_eq!(
            names,
            [
                "chirp",
                "multisine",
                "sawtooth",
                "sine",
                "square",
                "staircase",
                "step",
                "triangular",
                "zero"
            ]
        );
    }

    #[test]
    fn chirp_by_name_matches_typed_call() {
        let mut p = SignalParams::new("chirp", 10.0, 0.01);
        p.bandwidth = Some(6.0);
        let by_name = SignalRegistry::builtin().generate(&p).unwrap();
        let typed = chirp(&ChirpSpec::for_bandwidth(6.0, DEFAULT_AMPLITUDE, 10.0, 0.01).unwrap()).unwrap();
        assert_eq!(by_name, typed);
    }

    #[test]
    fn band_scale_moves_tones() {
        let mut p = SignalParams::new("multisine", 5.0, 0.001);
        p.bandwidth = Some(2.0);
        p.band_scale = Some(10.0);
        p.amplitude = Some(1.0);
        let x = SignalRegistry::builtin().generate(&p).unwrap();
        let t = 0.5;
        let expected: f64 = [2.0, 10.0, 40.0].iter().map(|w: &f64| (w * t).sin()).sum();
        assert!((x.samples()[500] - expected).abs() < 1e-12);
    }

    #[test]
    fn unknown_kind_and_missing_fields() {
        let r = SignalRegistry::builtin();
        let err = r.generate(&SignalParams::new("prbs", 1.0, 0.1)).unwrap_err();
        assert!(err.to_string().contains("unknown signal kind"));
        assert!(r.generate(&SignalParams::new("chirp", 1.0, 0.1)).is_err());
        assert!(r.generate(&SignalParams::new("sine", 1.0, 0.1)).is_err());
    }

    #[test]
    fn zero_signal() {
        let x = SignalRegistry::builtin()
            .generate(&SignalParams::new("zero", 1.0, 0.1))
            .unwrap();
        assert!(x.samples().iter().all(|v| *v == 0.0));
    }
}
