use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Aligned input/output records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    u: TimeSeries,
    y: TimeSeries,
}

impl Dataset {
    pub fn new(u: TimeSeries, y: TimeSeries) -> Result<Self> {
        if !u.is_aligned_with(&y) {
            return Err(Error::InvalidInput(format!(
                "input and output are not aligned (t0 {} / {}, dt {} / {}, length {} / {})",
                u.t0(),
                y.t0(),
                u.dt(),
                y.dt(),
                u.len(),
                y.len()
            )));
        }
        Ok(Self { u, y })
    }

    pub fn from_columns(t0: f64, dt: f64, u: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::new(TimeSeries::new(t0, dt, u)?, TimeSeries::new(t0, dt, y)?)
    }

    pub fn u(&self) -> &TimeSeries {
        &self.u
    }

    pub fn y(&self) -> &TimeSeries {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.u.dt()
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        Self::new(self.u.slice(range.clone())?, self.y.slice(range)?)
    }

    pub fn resample(&self, target_dt: f64) -> Result<Self> {
        Self::new(resample(&self.u, target_dt)?, resample(&self.y, target_dt)?)
    }
}

/// Fraction of a record used for estimation; the rest is for validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub estimation_fraction: f64,
}

impl SplitSpec {
    pub fn new(estimation_fraction: f64) -> Result<Self> {
        let s = Self {
            estimation_fraction,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.estimation_fraction;
        if f > 0.0 && f < 1.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "estimation fraction must be in (0, 1), got {f}"
            )))
        }
    }
}

/// Block-averages `series` down to `target_dt`.
///
/// Each output sample is the mean of one block of `target_dt / dt` input
/// samples and carries the time stamp of the block's first sample. A trailing
/// partial block is dropped.
pub fn resample(series: &TimeSeries, target_dt: f64) -> Result<TimeSeries> {
    let dt = series.dt();
    if !(target_dt.is_finite() && target_dt > 0.0) {
        return Err(Error::Config(format!(
            "resampling period must be positive, got {target_dt}"
        )));
    }
    let ratio = target_dt / dt;
    let factor = ratio.round();
    if factor < 1.0 || (ratio - factor).abs() > 1e-9 * ratio {
        return Err(Error::Config(format!(
            "resampling period {target_dt} s is not an integer multiple of {dt} s"
        )));
    }
    let factor = factor as usize;
    if factor == 1 {
        return Ok(series.clone());
    }
    if series.len() < factor {
        return Err(Error::InsufficientData(format!(
            "{} samples cannot be decimated by {factor}",
            series.len()
        )));
    }
    let samples = series
        .samples()
        .chunks_exact(factor)
        .map(|block| block.iter().sum::<f64>() / factor as f64)
        .collect();
    TimeSeries::new(series.t0(), target_dt, samples)
}

/// Splits into a leading estimation part of `round(fraction * N)` samples and
/// the remaining validation part.
pub fn split_dataset(data: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    let n = data.len();
    let n_est = (spec.estimation_fraction * n as f64).round() as usize;
    if n_est < 2 || n - n_est < 2 {
        return Err(Error::InsufficientData(format!(
            "splitting {n} samples at {} leaves {n_est} estimation and {} validation samples",
            spec.estimation_fraction,
            n - n_est
        )));
    }
    Ok((data.slice(0..n_est)?, data.slice(n_est..n)?))
}
