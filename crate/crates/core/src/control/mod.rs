//! Nonlinear-gain PID control, Ziegler-Nichols tuning and closed-loop runs.

mod closed_loop;
mod npid;
mod tuning;

pub use closed_loop::{simulate_closed_loop, ClosedLoopRun};
pub use npid::{nonlinear_gain, npid_step, ControllerState, NpidConfig, NpidOutput, PidGains};
pub use tuning::{
    find_critical_gain, oscillation_growth, ziegler_nichols, CriticalGain, CriticalGainOptions,
    ZnResult,
};
