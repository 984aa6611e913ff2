use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `k(e) = k0 + k1 (1 - sech(k2 e))`, written with the exponential form of sech.
///
/// sech is taken as 0 once `|k2 e| > 40`, where it is below 1e-17.
pub fn nonlinear_gain(e: f64, k0: f64, k1: f64, k2: f64) -> f64 {
    let x = k2 * e;
    let sech = if x.abs() > 40.0 {
        0.0
    } else {
        2.0 / (x.exp() + (-x).exp())
    };
    k0 + k1 * (1.0 - sech)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    pub fn scaled(&self, kp: f64, ki: f64, kd: f64) -> Self {
        Self {
            kp: self.kp * kp,
            ki: self.ki * ki,
            kd: self.kd * kd,
        }
    }
}

/// PID gains, nonlinear-gain constants and output limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NpidConfig {
    pub gains: PidGains,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// Derivative filter time constant; `None` means five sample periods.
    pub derivative_filter_tau: Option<f64>,
    pub anti_windup: bool,
}

impl Default for NpidConfig {
    fn default() -> Self {
        Self {
            gains: PidGains {
                kp: 1.0,
                ki: 0.0,
                kd: 0.0,
            },
            k0: 1.0,
            k1: 3.0,
            k2: 0.05,
            u_min: -10.0,
            u_max: 10.0,
            derivative_filter_tau: None,
            anti_windup: true,
        }
    }
}

impl NpidConfig {
    pub fn with_gains(gains: PidGains) -> Self {
        Self {
            gains,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let PidGains { kp, ki, kd } = self.gains;
        for (name, v) in [("Kp", kp), ("Ki", ki), ("Kd", kd), ("k1", self.k1), ("k2", self.k2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.k0.is_finite() && self.k0 > 0.0) {
            return Err(Error::Config(format!("k0 must be positive, got {}", self.k0)));
        }
        if !(self.u_min < self.u_max) || self.u_min.is_nan() {
            return Err(Error::Config(format!(
                "output limits need u_min < u_max, got {} and {}",
                self.u_min, self.u_max
            )));
        }
        if let Some(tau) = self.derivative_filter_tau {
            if !(tau.is_finite() && tau >= 0.0) {
                return Err(Error::Config(format!(
                    "derivative filter time constant must be >= 0, got {tau}"
                )));
            }
        }
        Ok(())
    }

    pub fn gain(&self, e: f64) -> f64 {
        nonlinear_gain(e, self.k0, self.k1, self.k2)
    }
}

/// Discrete controller memory.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControllerState {
    pub integral: f64,
    pub previous_error: f64,
    pub filtered_error: f64,
    pub initialized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpidOutput {
    /// Command after clamping.
    pub u: f64,
    /// Nonlinear gain applied this step.
    pub k: f64,
    pub saturated: bool,
}

/// One controller update for error `e` after `dt` seconds.
///
/// The integral is a trapezoidal sum whose first step pairs `e` with a
/// previous error of zero, so a constant error `e` held for `n` steps
/// accumulates `(n - 1/2) e dt`. The derivative is the backward difference of
/// the error passed through a first-order filter and is zero on the first
/// step. With anti-windup, a step whose unclamped output saturates in the
/// direction of `e` leaves the integral unchanged.
pub fn npid_step(state: &mut ControllerState, e: f64, dt: f64, config: &NpidConfig) -> Result<NpidOutput> {
    if !e.is_finite() {
        return Err(Error::InvalidInput(format!("controller error is not finite: {e}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!("controller period must be positive, got {dt}")));
    }
    let PidGains { kp, ki, kd } = config.gains;
    let tau = config.derivative_filter_tau.unwrap_or(5.0 * dt);
    let (prev_e, prev_f) = if state.initialized {
        (state.previous_error, state.filtered_error)
    } else {
        (0.0, e)
    };
    let filtered = prev_f + dt / (tau + dt) * (e - prev_f);
    let derivative = (filtered - prev_f) / dt;
    let candidate = state.integral + 0.5 * dt * (prev_e + e);

    let k = config.gain(e);
    let command = |integral: f64| k * (kp * e + ki * integral + kd * derivative);
    let mut raw = command(candidate);
    let mut integral = candidate;
    if config.anti_windup
        && ((raw > config.u_max && e > 0.0) || (raw < config.u_min && e < 0.0))
    {
        integral = state.integral;
        raw = command(integral);
    }
    let u = raw.clamp(config.u_min, config.u_max);

    *state = ControllerState {
        integral,
        previous_error: e,
        filtered_error: filtered,
        initialized: true,
    };
    Ok(NpidOutput {
        u,
        k,
        saturated: u != raw,
    })
}
