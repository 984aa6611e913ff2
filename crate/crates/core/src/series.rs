//! Uniformly sampled signals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled signal: `samples[i]` is the value at `t0 + i * dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    t0: f64,
    dt: f64,
    samples: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series, rejecting a non-positive `dt`, an empty sample list or non-finite values.
    pub fn new(t0: f64, dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::InvalidInput(format!("t0 must be finite, got {t0}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        if samples.is_empty() {
            return Err(Error::InvalidInput("time series has no samples".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sample {i} is not finite ({})",
                samples[i]
            )));
        }
        Ok(Self { t0, dt, samples })
    }

    /// Evaluates `f` at `t = i * dt` for `i = 0..=floor(duration / dt)`.
    pub fn from_fn(dt: f64, duration: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = sample_count(dt, duration)?;
        let samples = (0..n).map(|i| f(i as f64 * dt)).collect();
        Self::new(0.0, dt, samples)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time stamp of sample `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |i| self.time(i))
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Copy with the same timing and new values.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(self.t0, self.dt, samples)
    }

    /// Copy with the time origin moved to `t0`.
    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    /// Samples `range` as a new series whose origin is the first kept sample.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        let t0 = self.time(range.start);
        Self::new(t0, self.dt, self.samples[range].to_vec())
    }

    /// True when both series share `t0`, `dt` and length.
    pub fn is_aligned_with(&self, other: &Self) -> bool {
        self.len() == other.len()
            && same_time(self.dt, other.dt)
            && same_time(self.t0, other.t0)
    }
}

/// Number of samples `0, dt, ..., k*dt` with `k*dt <= duration`.
pub(crate) fn sample_count(dt: f64, duration: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::Config(format!(
            "duration must be positive, got {duration}"
        )));
    }
    // Tolerate representation error so that e.g. 50.0 / 0.05 keeps its last sample.
    let steps = (duration / dt * (1.0 + 1e-12)).floor();
    Ok(steps as usize + 1)
}

pub(crate) fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}
