use serde::{Deserialize, Serialize};

use super::npid::PidGains;
use crate::error::{Error, Result};
use crate::target::Target;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalGainOptions {
    pub k_low: f64,
    pub k_high: f64,
    /// Control period of the P-only loop.
    pub dt: f64,
    /// Length of each trial run, s.
    pub duration: f64,
    /// Step reference amplitude.
    pub amplitude: f64,
    /// Bisection stops once `k_high / k_low < 1 + rel_tol`.
    pub rel_tol: f64,
}

impl CriticalGainOptions {
    pub fn new(k_low: f64, k_high: f64, dt: f64, duration: f64) -> Self {
        Self {
            k_low,
            k_high,
            dt,
            duration,
            amplitude: 1.0,
            rel_tol: 1e-5,
        }
    }

    fn validate(&self) -> Result<()> {
        let all_positive = [self.k_low, self.k_high, self.dt, self.duration, self.amplitude, self.rel_tol]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !all_positive || self.k_low >= self.k_high {
            return Err(Error::Config(format!(
                "critical gain search needs 0 < k_low < k_high and positive dt, duration, \
                 amplitude and tolerance: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalGain {
    pub kcr: f64,
    pub tcr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZnResult {
    pub kcr: f64,
    pub tcr: f64,
    pub gains: PidGains,
}

/// Classic ultimate-cycle PID rule: `Kp = 0.6 Kcr`, `Ti = Tcr / 2`, `Td = Tcr / 8`.
pub fn ziegler_nichols(kcr: f64, tcr: f64) -> Result<ZnResult> {
    if !(kcr.is_finite() && kcr > 0.0 && tcr.is_finite() && tcr > 0.0) {
        return Err(Error::Tuning(format!(
            "critical gain and period must be positive, got {kcr} and {tcr}"
        )));
    }
    let kp = 0.6 * kcr;
    let ti = 0.5 * tcr;
    let td = 0.125 * tcr;
    Ok(ZnResult {
        kcr,
        tcr,
        gains: PidGains {
            kp,
            ki: kp / ti,
            kd: kp * td,
        },
    })
}

/// Outcome of one P-only trial.
enum Trial {
    Growing,
    NotGrowing,
}

/// Unclamped P-only unity-feedback step response. `None` if the run blew up.
fn p_only_run(target: &mut dyn Target, k: f64, opts: &CriticalGainOptions) -> Option<Vec<f64>> {
    target.reset();
    let n = (opts.duration / opts.dt).round() as usize + 1;
    let limit = 1e6 * opts.amplitude;
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let yi = target.output();
        if !yi.is_finite() || yi.abs() > limit {
            return None;
        }
        y.push(yi);
        target.advance(k * (opts.amplitude - yi), opts.dt).ok()?;
    }
    Some(y)
}

/// Local extrema as `(fractional index, value, is_maximum)`, refined by a
/// parabola through the extremal sample and its neighbours.
fn extrema(y: &[f64]) -> Vec<(f64, f64, bool)> {
    let mut out = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        let (d0, d1) = (y[i] - y[i - 1], y[i + 1] - y[i]);
        if d0 * d1 < 0.0 {
            let curv = y[i - 1] - 2.0 * y[i] + y[i + 1];
            let shift = (0.5 * (y[i - 1] - y[i + 1]) / curv).clamp(-0.5, 0.5);
            out.push((i as f64 + shift, y[i] - 0.25 * (y[i - 1] - y[i + 1]) * shift, d0 > 0.0));
        }
    }
    out
}

/// Exponential growth rate (1/s) of the oscillation in `y`, fitted to the
/// logarithm of successive half peak-to-peak amplitudes over the second half
/// of the record. `None` when `y` shows fewer than two full cycles.
pub fn oscillation_growth(y: &[f64], dt: f64) -> Option<f64> {
    let ext = extrema(y);
    if ext.len() < 4 {
        return None;
    }
    let mut points: Vec<(f64, f64)> = ext
        .windows(2)
        .map(|w| (0.5 * (w[0].0 + w[1].0) * dt, 0.5 * (w[1].1 - w[0].1).abs()))
        .collect();
    let peak = points.iter().fold(0.0_f64, |m, p| m.max(p.1));
    // Below this the oscillation has decayed into rounding noise.
    if let Some(cut) = points.iter().position(|p| p.1 <= 1e-9 * peak) {
        if cut < 3 {
            return Some(-f64::INFINITY);
        }
        points.truncate(cut);
    }
    let t_mid = 0.5 * y.len() as f64 * dt;
    let mut tail: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 >= t_mid).collect();
    if tail.len() < 3 {
        tail = points[points.len().saturating_sub(3)..].to_vec();
    }
    if tail.len() < 2 {
        return None;
    }
    let n = tail.len() as f64;
    let mt = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = tail.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (sxy, sxx) = tail.iter().fold((0.0, 0.0), |(sxy, sxx), p| {
        (sxy + (p.0 - mt) * (p.1.ln() - ml), sxx + (p.0 - mt).powi(2))
    });
    Some(sxy / sxx)
}

fn trial(target: &mut dyn Target, k: f64, opts: &CriticalGainOptions) -> Trial {
    match p_only_run(target, k, opts) {
        None => Trial::Growing,
        Some(y) => match oscillation_growth(&y, opts.dt) {
            Some(rate) if rate > 0.0 => Trial::Growing,
            _ => Trial::NotGrowing,
        },
    }
}

/// Ultimate gain and period of the unity-feedback P-only loop around `target`.
///
/// Bisects geometrically between a gain whose step response does not grow and
/// one whose oscillation grows. At the returned gain the amplitude over the
/// last 5 cycles must stay within 5%; `tcr` is the mean peak-to-peak period
/// of those cycles.
pub fn find_critical_gain(target: &mut dyn Target, opts: &CriticalGainOptions) -> Result<CriticalGain> {
    opts.validate()?;
    if let Trial::NotGrowing = trial(target, opts.k_high, opts) {
        return Err(Error::Tuning(format!(
            "no growing oscillation up to gain {}",
            opts.k_high
        )));
    }
    if let Trial::Growing = trial(target, opts.k_low, opts) {
        return Err(Error::Tuning(format!(
            "loop already unstable at the lower gain bound {}",
            opts.k_low
        )));
    }
    let (mut lo, mut hi) = (opts.k_low, opts.k_high);
    while hi / lo > 1.0 + opts.rel_tol {
        let mid = (lo * hi).sqrt();
        match trial(target, mid, opts) {
            Trial::Growing => hi = mid,
            Trial::NotGrowing => lo = mid,
        }
    }
    let kcr = lo;
    let y = p_only_run(target, kcr, opts)
        .ok_or_else(|| Error::Tuning(format!("P-only loop diverged at gain {kcr}")))?;
    let ext = extrema(&y);
    let peaks: Vec<(f64, f64)> = ext.iter().filter(|e| e.2).map(|e| (e.0, e.1)).collect();
    if peaks.len() < 6 {
        return Err(Error::Tuning(format!(
            "only {} oscillation peaks at gain {kcr}; lengthen the trial duration",
            peaks.len()
        )));
    }
    let last = &peaks[peaks.len() - 6..];
    let tcr = (last[5].0 - last[0].0) * opts.dt / 5.0;
    // Peak-to-trough swing of each cycle.
    let amps: Vec<f64> = last
        .windows(2)
        .map(|w| {
            let trough = ext
                .iter()
                .filter(|e| !e.2 && e.0 > w[0].0 && e.0 < w[1].0)
                .fold(f64::INFINITY, |m, e| m.min(e.1));
            w[1].1 - trough
        })
        .collect();
    let a_max = amps.iter().cloned().fold(0.0, f64::max);
    let a_min = amps.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(a_min > 0.0 && a_max / a_min - 1.0 <= 0.05) {
        return Err(Error::Tuning(format!(
            "oscillation at gain {kcr} is not sustained within 5% over the last 5 cycles \
             (amplitudes {a_min:.3e}..{a_max:.3e})"
        )));
    }
    Ok(CriticalGain { kcr, tcr })
}
