use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{same_time, TimeSeries};

fn check_pair(measured: &TimeSeries, simulated: &TimeSeries, min_len: usize) -> Result<()> {
    if measured.len() != simulated.len() {
        return Err(Error::InvalidInput(format!(
            "series lengths differ ({} vs {})",
            measured.len(),
            simulated.len()
        )));
    }
    if !same_time(measured.dt(), simulated.dt()) {
        return Err(Error::InvalidInput(format!(
            "sample periods differ ({} vs {})",
            measured.dt(),
            simulated.dt()
        )));
    }
    if measured.len() < min_len {
        return Err(Error::InsufficientData(format!(
            "need at least {min_len} samples, got {}",
            measured.len()
        )));
    }
    Ok(())
}

/// Normalised-RMSE fit in percent: `100 (1 - |y - yhat| / |y - mean(y)|)`.
pub fn best_fit(measured: &TimeSeries, simulated: &TimeSeries) -> Result<f64> {
    check_pair(measured, simulated, 2)?;
    let mean = measured.mean();
    let (num, den) = measured
        .samples()
        .iter()
        .zip(simulated.samples())
        .fold((0.0, 0.0), |(n, d), (y, yh)| {
            (n + (y - yh).powi(2), d + (y - mean).powi(2))
        });
    if den == 0.0 {
        return Err(Error::MetricUndefined(
            "best fit: measured output is constant".into(),
        ));
    }
    Ok(100.0 * (1.0 - (num / den).sqrt()))
}

pub fn mse(measured: &TimeSeries, simulated: &TimeSeries) -> Result<f64> {
    check_pair(measured, simulated, 1)?;
    let sum: f64 = measured
        .samples()
        .iter()
        .zip(simulated.samples())
        .map(|(y, yh)| (y - yh).powi(2))
        .sum();
    Ok(sum / measured.len() as f64)
}

pub fn rmse(measured: &TimeSeries, simulated: &TimeSeries) -> Result<f64> {
    mse(measured, simulated).map(f64::sqrt)
}

/// Akaike's final prediction error `mse (1 + d/N) / (1 - d/N)`.
pub fn fpe(mse: f64, n_samples: usize, n_params: usize) -> Result<f64> {
    if n_samples <= n_params {
        return Err(Error::MetricUndefined(format!(
            "FPE needs more samples ({n_samples}) than parameters ({n_params})"
        )));
    }
    let r = n_params as f64 / n_samples as f64;
    Ok(mse * (1.0 + r) / (1.0 - r))
}

/// Goodness of fit of a simulated output against a measured one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub best_fit_percent: f64,
    pub mse: f64,
    pub fpe: f64,
    pub rmse: f64,
    pub n_samples: usize,
    pub n_params: usize,
}

impl FitReport {
    pub fn compute(measured: &TimeSeries, simulated: &TimeSeries, n_params: usize) -> Result<Self> {
        let best_fit_percent = best_fit(measured, simulated)?;
        let mse = mse(measured, simulated)?;
        let n_samples = measured.len();
        Ok(Self {
            best_fit_percent,
            mse,
            fpe: fpe(mse, n_samples, n_params)?,
            rmse: mse.sqrt(),
            n_samples,
            n_params,
        })
    }

    /// `(name, value)` rows in report order.
    pub fn rows(&self) -> [(&'static str, f64); 6] {
        [
            ("best_fit_percent", self.best_fit_percent),
            ("mse", self.mse),
            ("fpe", self.fpe),
            ("rmse", self.rmse),
            ("n_samples", self.n_samples as f64),
            ("n_params", self.n_params as f64),
        ]
    }
}
