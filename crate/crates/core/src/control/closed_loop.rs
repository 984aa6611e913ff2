use serde::{Deserialize, Serialize};

use super::npid::{npid_step, ControllerState, NpidConfig};
use crate::error::{Error, Result};
use crate::series::TimeSeries;
use crate::target::Target;

/// Sample-aligned closed-loop record: at sample `i`, `y[i]` is measured,
/// `e[i] = r[i] - y[i]` and `u[i]` is then held until sample `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopRun {
    pub t0: f64,
    pub dt: f64,
    pub r: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub e: Vec<f64>,
    pub k: Vec<f64>,
}

impl ClosedLoopRun {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn output(&self) -> Result<TimeSeries> {
        TimeSeries::new(self.t0, self.dt, self.y.clone())
    }

    pub fn command(&self) -> Result<TimeSeries> {
        TimeSeries::new(self.t0, self.dt, self.u.clone())
    }

    /// RMS of the tracking error.
    pub fn tracking_rmse(&self) -> f64 {
        (self.e.iter().map(|e| e * e).sum::<f64>() / self.e.len() as f64).sqrt()
    }
}

/// Drives `target` from its initial condition under NPID control so that it
/// tracks `reference`, one reference sample per control period.
pub fn simulate_closed_loop(
    target: &mut dyn Target,
    controller: &NpidConfig,
    reference: &TimeSeries,
) -> Result<ClosedLoopRun> {
    controller.validate()?;
    target.reset();
    let dt = reference.dt();
    let n = reference.len();
    let mut run = ClosedLoopRun {
        t0: reference.t0(),
        dt,
        r: reference.samples().to_vec(),
        y: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        e: Vec::with_capacity(n),
        k: Vec::with_capacity(n),
    };
    let mut state = ControllerState::default();
    for (i, &r) in reference.samples().iter().enumerate() {
        let y = target.output();
        let e = r - y;
        let out = npid_step(&mut state, e, dt, controller)?;
        run.y.push(y);
        run.e.push(e);
        run.u.push(out.u);
        run.k.push(out.k);
        if i + 1 < n {
            target.advance(out.u, dt).map_err(|err| match err {
                Error::Divergence { detail, .. } => Error::Divergence { index: i + 1, detail },
                other => other,
            })?;
        }
    }
    Ok(run)
}
