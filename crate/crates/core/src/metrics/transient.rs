use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Thresholds for [`transient_metrics_with`], as fractions of the final value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransientSpec {
    pub rise_low: f64,
    pub rise_high: f64,
    pub settling_band: f64,
}

impl Default for TransientSpec {
    fn default() -> Self {
        Self {
            rise_low: 0.1,
            rise_high: 0.9,
            settling_band: 0.02,
        }
    }
}

impl TransientSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.rise_low && self.rise_low < self.rise_high && self.rise_high <= 1.0) {
            return Err(Error::Config(format!(
                "rise thresholds must satisfy 0 <= low < high <= 1, got {} and {}",
                self.rise_low, self.rise_high
            )));
        }
        if !(self.settling_band > 0.0 && self.settling_band < 1.0) {
            return Err(Error::Config(format!(
                "settling band must be in (0, 1), got {}",
                self.settling_band
            )));
        }
        Ok(())
    }
}

/// Step-response figures. Times are measured from the first sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransientMetrics {
    pub rise_time: f64,
    pub settling_time: f64,
    /// Percent of the final value.
    pub overshoot: f64,
    pub steady_state_error: f64,
}

impl TransientMetrics {
    pub fn rows(&self) -> [(&'static str, f64); 4] {
        [
            ("rise_time", self.rise_time),
            ("settling_time", self.settling_time),
            ("overshoot_percent", self.overshoot),
            ("steady_state_error", self.steady_state_error),
        ]
    }
}

/// [`transient_metrics_with`] using 10-90% rise and a 2% settling band.
pub fn transient_metrics(response: &TimeSeries, reference_level: f64) -> Result<TransientMetrics> {
    transient_metrics_with(response, reference_level, &TransientSpec::default())
}

/// Rise time, settling time and overshoot of a step response starting from zero.
///
/// The final value is the last sample. Crossing times are linearly
/// interpolated between samples. The last 10% of samples must already lie in
/// the settling band.
pub fn transient_metrics_with(
    response: &TimeSeries,
    reference_level: f64,
    spec: &TransientSpec,
) -> Result<TransientMetrics> {
    spec.validate()?;
    let y = response.samples();
    let n = y.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "transient analysis needs at least 2 samples".into(),
        ));
    }
    let last = y[n - 1];
    let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if last == 0.0 || last.abs() <= 1e-12 * scale {
        return Err(Error::MetricUndefined(
            "overshoot: final value is zero".into(),
        ));
    }
    let z: Vec<f64> = y.iter().map(|v| v / last).collect();
    let dt = response.dt();
    let band = spec.settling_band;

    let tail = n.div_ceil(10);
    if let Some(i) = (n - tail..n).find(|&i| (z[i] - 1.0).abs() > band) {
        return Err(Error::MetricUndefined(format!(
            "settling time: response leaves the {}% band at t = {} within the final 10% of the record",
            band * 100.0,
            response.time(i)
        )));
    }

    let t_low = first_crossing(&z, spec.rise_low, dt);
    let t_high = first_crossing(&z, spec.rise_high, dt);
    let rise_time = match (t_low, t_high) {
        (Some(a), Some(b)) => b - a,
        _ => {
            return Err(Error::MetricUndefined(format!(
                "rise time: response never reaches {}% of its final value",
                spec.rise_high * 100.0
            )))
        }
    };

    let settling_time = match (0..n).rev().find(|&i| (z[i] - 1.0).abs() > band) {
        None => 0.0,
        Some(j) => {
            let edge = if z[j] > 1.0 { 1.0 + band } else { 1.0 - band };
            let frac = (z[j] - edge) / (z[j] - z[j + 1]);
            (j as f64 + frac) * dt
        }
    };

    let peak = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(TransientMetrics {
        rise_time,
        settling_time,
        overshoot: (100.0 * (peak - 1.0)).max(0.0),
        steady_state_error: reference_level - last,
    })
}

fn first_crossing(z: &[f64], level: f64, dt: f64) -> Option<f64> {
    let i = z.iter().position(|v| *v >= level)?;
    if i == 0 {
        return Some(0.0);
    }
    let frac = (level - z[i - 1]) / (z[i] - z[i - 1]);
    Some((i as f64 - 1.0 + frac) * dt)
}
